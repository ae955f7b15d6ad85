#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "structbias/treebank.hpp"
#include "test_support.hpp"

namespace structbias {
namespace {

constexpr const char* kHabita =
    "# sent_id = habita\n"
    "# text = Habita en Perú.\n"
    "1\tHabita\thabitar\tVERB\t_\tMood=Ind|Person=3\t0\troot\t_\t_\n"
    "2\ten\ten\tADP\t_\t_\t3\tcase\t_\t_\n"
    "3\tPerú\tPerú\tPROPN\t_\t_\t1\tobl\t_\tSpaceAfter=No\n"
    "4\t.\t.\tPUNCT\t_\t_\t1\tpunct\t_\t_\n"
    "\n";

TEST(ParseConllu, EmptyInputYieldsNoSentences) {
  EXPECT_TRUE(parse_conllu("").empty());
  EXPECT_TRUE(parse_conllu("\n\n").empty());
}

TEST(ParseConllu, TwoTokenBlock) {
  const auto sents = parse_conllu(
      "1\tHabita\thabitar\tVERB\t_\t_\t0\troot\t_\t_\n"
      "2\ten\ten\tADP\t_\t_\t1\tcase\t_\t_\n");
  ASSERT_EQ(sents.size(), 1u);
  ASSERT_EQ(sents[0].tokens.size(), 2u);
  EXPECT_EQ(root_of(sents[0]), 1);
  EXPECT_EQ(sents[0].tokens[1].form, "en");
  EXPECT_EQ(sents[0].tokens[1].head, 1);
  EXPECT_EQ(sents[0].tokens[1].deprel, "case");
  EXPECT_EQ(sents[0].sent_id, "1");  // ordinal when no sent_id comment
}

TEST(ParseConllu, MultiwordRangeBecomesSpan) {
  const auto sents = parse_conllu(
      "# sent_id = mwt\n"
      "1\tVive\tvivir\tVERB\t_\t_\t0\troot\t_\t_\n"
      "2-3\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "2\tde\tde\tADP\t_\t_\t4\tcase\t_\t_\n"
      "3\tel\tel\tDET\t_\t_\t4\tdet\t_\t_\n"
      "4\trío\trío\tNOUN\t_\t_\t1\tobl\t_\t_\n");
  ASSERT_EQ(sents.size(), 1u);
  const Sentence& s = sents[0];
  ASSERT_EQ(s.tokens.size(), 4u);
  EXPECT_EQ(s.tokens[1].form, "de");
  EXPECT_EQ(s.tokens[2].form, "el");
  ASSERT_EQ(s.mwt.size(), 1u);
  EXPECT_EQ(s.mwt[0], (MultiwordSpan{2, 3, "del", true}));
}

TEST(ParseConllu, EmptyNodesAreDropped) {
  const auto sents = parse_conllu(
      "1\tcome\tcomer\tVERB\t_\t_\t0\troot\t_\t_\n"
      "1.1\tcome\tcomer\tVERB\t_\t_\t_\t_\t0:root\t_\n"
      "2\tpan\tpan\tNOUN\t_\t_\t1\tobj\t_\t_\n");
  ASSERT_EQ(sents.size(), 1u);
  EXPECT_EQ(sents[0].tokens.size(), 2u);
}

TEST(ParseConllu, CommentsFeatsAndSpaceAfter) {
  const auto sents = parse_conllu(kHabita);
  ASSERT_EQ(sents.size(), 1u);
  const Sentence& s = sents[0];
  EXPECT_EQ(s.sent_id, "habita");
  ASSERT_EQ(s.comments.size(), 2u);
  EXPECT_EQ(s.comments[1], "# text = Habita en Perú.");
  EXPECT_TRUE(s.tokens[0].has_feat("Person", "3"));
  EXPECT_FALSE(s.tokens[2].space_after);
  EXPECT_TRUE(s.tokens[3].space_after);
}

TEST(ParseConllu, ByteOrderMarkAndCrlfAreTolerated) {
  std::string crlf = "\xEF\xBB\xBF";
  for (char c : std::string(kHabita)) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  const auto a = parse_conllu(kHabita);
  const auto b = parse_conllu(crlf);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(a[0].tokens, b[0].tokens);
}

TEST(ParseConllu, WrongColumnCountReportsOffsetAndSentence) {
  const std::string input =
      "# sent_id = bad-cols\n"
      "1\tHabita\thabitar\tVERB\t_\t_\t0\troot\t_\n";
  try {
    parse_conllu(input, "x.conllu");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("x.conllu"), std::string::npos) << msg;
    EXPECT_NE(msg.find("byte 21"), std::string::npos) << msg;
    EXPECT_NE(msg.find("bad-cols"), std::string::npos) << msg;
  }
}

TEST(ParseConllu, NonNumericIdOrHeadIsParseError) {
  EXPECT_THROW(parse_conllu("x\tA\ta\tVERB\t_\t_\t0\troot\t_\t_\n"), ParseError);
  EXPECT_THROW(parse_conllu("1\tA\ta\tVERB\t_\t_\tz\troot\t_\t_\n"), ParseError);
  EXPECT_THROW(parse_conllu("1\tA\ta\tVERB\t_\t_\t_\troot\t_\t_\n"), ParseError);
}

TEST(ParseConllu, RootCountIsChecked) {
  const std::string none =
      "# sent_id = no-root\n"
      "1\tA\ta\tVERB\t_\t_\t2\tobj\t_\t_\n"
      "2\tB\tb\tVERB\t_\t_\t1\tobj\t_\t_\n";
  const std::string two =
      "# sent_id = two-roots\n"
      "1\tA\ta\tVERB\t_\t_\t0\troot\t_\t_\n"
      "2\tB\tb\tVERB\t_\t_\t0\troot\t_\t_\n";
  try {
    parse_conllu(none);
    FAIL();
  } catch (const StructureError& e) {
    EXPECT_NE(std::string(e.what()).find("no-root"), std::string::npos);
  }
  try {
    parse_conllu(two);
    FAIL();
  } catch (const StructureError& e) {
    EXPECT_NE(std::string(e.what()).find("two-roots"), std::string::npos);
  }
}

TEST(ParseConllu, GapsAndDanglingHeadsAreStructuralErrors) {
  EXPECT_THROW(parse_conllu("1\tA\ta\tVERB\t_\t_\t0\troot\t_\t_\n"
                            "3\tB\tb\tNOUN\t_\t_\t1\tobj\t_\t_\n"),
               StructureError);
  EXPECT_THROW(parse_conllu("1\tA\ta\tVERB\t_\t_\t0\troot\t_\t_\n"
                            "2\tB\tb\tNOUN\t_\t_\t7\tobj\t_\t_\n"),
               StructureError);
  EXPECT_THROW(parse_conllu("1\tA\ta\tVERB\t_\t_\t0\troot\t_\t_\n"
                            "2\tB\tb\tNOUN\t_\t_\t2\tobj\t_\t_\n"),
               StructureError);
}

TEST(ParseConllu, ReadsMultipleSentencesFromFixture) {
  const auto es = parse_conllu_file(testing::data_path("table1_es.conllu"));
  const auto el = parse_conllu_file(testing::data_path("table1_el.conllu"));
  EXPECT_EQ(es.size(), 6u);
  EXPECT_EQ(el.size(), 6u);
  EXPECT_THROW(parse_conllu_file(testing::data_path("missing.conllu")), IoError);
}

TEST(Detokenize, HonoursSpaceAfterAndHasNoTrailingSpace) {
  const Sentence s = parse_conllu(kHabita).at(0);
  const SurfaceText t = detokenize(s);
  EXPECT_EQ(t.text, "Habita en Perú.");
  EXPECT_EQ(t.span_of(1), (CharSpan{0, 6}));
  EXPECT_EQ(t.span_of(3), (CharSpan{10, 14}));  // "Perú" is 4 code points, 5 bytes
  EXPECT_EQ(t.span_of(4), (CharSpan{14, 15}));
}

TEST(Detokenize, SingleToken) {
  const Sentence s = parse_conllu("1\tX\tx\tINTJ\t_\t_\t0\troot\t_\t_\n").at(0);
  const SurfaceText t = detokenize(s);
  EXPECT_EQ(t.text, "X");
  EXPECT_EQ(t.span_of(1), (CharSpan{0, 1}));
}

TEST(Detokenize, MultiwordMembersShareTheSurfaceSpan) {
  const Sentence s = parse_conllu(
                         "1\tVive\tvivir\tVERB\t_\t_\t0\troot\t_\t_\n"
                         "2\tcerca\tcerca\tADV\t_\t_\t5\tadvmod\t_\t_\n"
                         "3-4\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
                         "3\tde\tde\tADP\t_\t_\t2\tfixed\t_\t_\n"
                         "4\tel\tel\tDET\t_\t_\t5\tdet\t_\t_\n"
                         "5\trío\trío\tNOUN\t_\t_\t1\tobl\t_\tSpaceAfter=No\n"
                         "6\t.\t.\tPUNCT\t_\t_\t1\tpunct\t_\t_\n")
                         .at(0);
  const SurfaceText t = detokenize(s);
  EXPECT_EQ(t.text, "Vive cerca del río.");
  EXPECT_EQ(t.span_of(3), (CharSpan{11, 14}));
  EXPECT_EQ(t.span_of(4), (CharSpan{11, 14}));
  EXPECT_EQ(t.surface_of(4), "del");
  ASSERT_EQ(t.mwt_member.count(3), 1u);
  EXPECT_EQ(t.mwt_member.at(4).surface_form, "del");
  EXPECT_EQ(t.mwt_member.count(5), 0u);
  EXPECT_EQ(t.span_of(5), (CharSpan{15, 18}));
}

TEST(Detokenize, IgnoresTextComment) {
  Sentence s = parse_conllu(kHabita).at(0);
  s.comments = {"# text = something else entirely"};
  EXPECT_EQ(detokenize(s).text, "Habita en Perú.");
}

TEST(RootOf, Basics) {
  EXPECT_EQ(root_of(parse_conllu("1\tX\tx\tVERB\t_\t_\t0\troot\t_\t_\n").at(0)), 1);
  const Sentence s = parse_conllu(
                         "1\tEl\tel\tDET\t_\t_\t2\tdet\t_\t_\n"
                         "2\tniño\tniño\tNOUN\t_\t_\t3\tnsubj\t_\t_\n"
                         "3\tcome\tcomer\tVERB\t_\t_\t0\troot\t_\t_\n")
                         .at(0);
  EXPECT_EQ(root_of(s), 3);
}

TEST(ChildrenOf, Basics) {
  const Sentence s = parse_conllu(
                         "1\tYo\tyo\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
                         "2\tcomo\tcomer\tVERB\t_\t_\t0\troot\t_\t_\n"
                         "3\tmucho\tmucho\tADV\t_\t_\t4\tadvmod\t_\t_\n"
                         "4\tpan\tpan\tNOUN\t_\t_\t2\tobj\t_\t_\n")
                         .at(0);
  EXPECT_EQ(children_of(s, 2), (std::vector<TokenId>{1, 4}));
  EXPECT_TRUE(children_of(s, 1).empty());
  EXPECT_EQ(children_of(s, 4), (std::vector<TokenId>{3}));
  EXPECT_THROW(children_of(s, 9), ContractError);
  EXPECT_THROW(children_of(s, 0), ContractError);
}

// ---------------------------------------------------------------------------
// Generated trees.

const std::vector<std::string> kForms = {"Habita", "en", "Perú", "ποταμός", "κυλά", "año",
                                         "«", "»", ",", "niño", "Γουέν", "x", "ñandú"};

Sentence random_sentence(std::mt19937& rng, int id) {
  std::uniform_int_distribution<int> len(1, 12);
  const int n = len(rng);
  Sentence s;
  s.sent_id = "gen-" + std::to_string(id);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 1);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> head(n + 1, 0);
  for (int k = 1; k < n; ++k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    head[order[k]] = order[pick(rng)];
  }
  for (int i = 1; i <= n; ++i) {
    Token t;
    t.id = i;
    t.form = kForms[rng() % kForms.size()];
    t.lemma = t.form;
    t.upos = (rng() % 2) ? "VERB" : "NOUN";
    t.xpos = "_";
    if (rng() % 3 == 0) t.feats["Number"] = "Sing";
    t.head = head[i];
    t.deprel = t.head == 0 ? "root" : ((rng() % 2) ? "nsubj" : "obl:arg");
    t.space_after = rng() % 4 != 0;
    s.tokens.push_back(t);
  }
  for (int i = 1; i + 1 <= n; ++i) {
    if (rng() % 5 == 0) {
      s.mwt.push_back({i, i + 1, "mw" + std::to_string(i), rng() % 2 == 0});
      ++i;
    }
  }
  return s;
}

TEST(TreebankProperties, SerializeParseRoundTrip) {
  std::mt19937 rng(7);
  for (int i = 0; i < 300; ++i) {
    const Sentence s = random_sentence(rng, i);
    const auto back = parse_conllu(serialize_tokens(s));
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].tokens, s.tokens);
  }
}

TEST(TreebankProperties, ChildrenPartitionNonRootTokens) {
  std::mt19937 rng(11);
  for (int i = 0; i < 300; ++i) {
    const Sentence s = parse_conllu(serialize_tokens(random_sentence(rng, i))).at(0);
    std::vector<int> seen(s.size() + 1, 0);
    std::size_t total = 0;
    for (const Token& p : s.tokens) {
      for (TokenId c : children_of(s, p.id)) {
        ++seen[c];
        ++total;
      }
    }
    EXPECT_EQ(total, s.size() - 1);
    for (const Token& t : s.tokens) EXPECT_EQ(seen[t.id], t.head == 0 ? 0 : 1);
  }
}

TEST(TreebankProperties, RootInvariantUnderPermutingOtherHeads) {
  std::mt19937 rng(5);
  for (int i = 0; i < 100; ++i) {
    Sentence s = random_sentence(rng, i);
    const TokenId r = root_of(s);
    std::vector<TokenId> heads;
    for (const Token& t : s.tokens)
      if (t.head != 0) heads.push_back(t.head);
    std::shuffle(heads.begin(), heads.end(), rng);
    std::size_t k = 0;
    for (Token& t : s.tokens)
      if (t.head != 0) t.head = heads[k++];
    EXPECT_EQ(root_of(s), r);
  }
}

TEST(TreebankProperties, EverySpanSlicesItsSurfaceForm) {
  std::mt19937 rng(3);
  for (int i = 0; i < 300; ++i) {
    const Sentence s = random_sentence(rng, i);
    const SurfaceText t = detokenize(s);
    std::size_t prev_end = 0;
    for (const Token& tok : s.tokens) {
      const CharSpan sp = t.span_of(tok.id);
      auto slice = util::utf8_slice(t.text, sp.start, sp.end);
      ASSERT_TRUE(slice.has_value());
      if (auto it = t.mwt_member.find(tok.id); it != t.mwt_member.end()) {
        EXPECT_EQ(*slice, it->second.surface_form);
      } else {
        EXPECT_EQ(*slice, tok.form);
      }
      if (sp.end != prev_end) {
        EXPECT_GE(sp.start, prev_end);  // members repeat their unit
      }
      prev_end = sp.end;
    }
  }
}

}  // namespace
}  // namespace structbias
