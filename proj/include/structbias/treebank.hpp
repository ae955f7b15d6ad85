#pragma once

// CoNLL-U reading and surface-text reconstruction.
//
// Only basic dependencies are kept: empty nodes ("5.1") are dropped and the
// DEPS column is ignored. Multiword-token range lines ("3-4") are recorded as
// MultiwordSpan and never appear in Sentence::tokens.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "structbias/errors.hpp"
#include "structbias/util.hpp"

namespace structbias {

using TokenId = int;

struct Token {
  TokenId id = 0;
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos;
  std::map<std::string, std::string> feats;
  TokenId head = 0;
  std::string deprel;
  bool space_after = true;

  // Relation without its subtype: "nsubj:pass" -> "nsubj".
  std::string_view deprel_base() const {
    const std::string_view d = deprel;
    return d.substr(0, d.find(':'));
  }

  bool has_feat(std::string_view key, std::string_view value) const {
    auto it = feats.find(std::string(key));
    return it != feats.end() && it->second == value;
  }

  friend bool operator==(const Token&, const Token&) = default;
};

struct MultiwordSpan {
  TokenId start_id = 0;
  TokenId end_id = 0;
  std::string surface_form;
  bool space_after = true;

  friend bool operator==(const MultiwordSpan&, const MultiwordSpan&) = default;
};

struct Sentence {
  std::string sent_id;
  std::vector<Token> tokens;
  std::vector<MultiwordSpan> mwt;
  std::vector<std::string> comments;

  std::size_t size() const { return tokens.size(); }
  bool contains(TokenId id) const {
    return id >= 1 && static_cast<std::size_t>(id) <= tokens.size();
  }
  // Ids are 1..n without gaps, so lookup is positional.
  const Token& token(TokenId id) const {
    if (!contains(id))
      throw ContractError("sentence " + sent_id + " has no token " +
                          std::to_string(id));
    return tokens[static_cast<std::size_t>(id - 1)];
  }
};

// Half-open range of Unicode scalar values.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct SurfaceText {
  std::string text;
  // Indexed by token id - 1. Tokens covered by a multiword span carry the
  // span of the whole multiword surface form.
  std::vector<CharSpan> token_spans;
  std::unordered_map<TokenId, MultiwordSpan> mwt_member;

  CharSpan span_of(TokenId id) const {
    return token_spans.at(static_cast<std::size_t>(id - 1));
  }
  // Surface string the span of `id` covers.
  std::string_view surface_of(TokenId id) const {
    const CharSpan sp = span_of(id);
    return util::utf8_slice(text, sp.start, sp.end).value();
  }
};

namespace internal {

inline std::map<std::string, std::string> parse_feats(std::string_view col) {
  std::map<std::string, std::string> feats;
  if (col == "_" || col.empty()) return feats;
  for (std::string_view kv : util::split(col, '|')) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string_view::npos) {
      feats.emplace(std::string(kv), "");
    } else {
      feats.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
    }
  }
  return feats;
}

inline bool misc_space_after(std::string_view col) {
  if (col == "_" || col.empty()) return true;
  for (std::string_view item : util::split(col, '|'))
    if (item == "SpaceAfter=No") return false;
  return true;
}

inline void check_structure(const Sentence& s) {
  const std::string where = "sentence " + s.sent_id + ": ";
  if (s.tokens.empty()) throw StructureError(where + "no tokens");
  int roots = 0;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const Token& t = s.tokens[i];
    if (t.id != static_cast<TokenId>(i + 1))
      throw StructureError(where + "token ids are not 1..n (found " +
                           std::to_string(t.id) + " at position " +
                           std::to_string(i + 1) + ")");
    if (t.head == t.id)
      throw StructureError(where + "token " + std::to_string(t.id) +
                           " is its own head");
    if (t.head < 0 || t.head > static_cast<TokenId>(s.tokens.size()))
      throw StructureError(where + "token " + std::to_string(t.id) +
                           " has dangling head " + std::to_string(t.head));
    if (t.deprel.empty() || t.deprel == "_")
      throw StructureError(where + "token " + std::to_string(t.id) +
                           " has no deprel");
    if (t.head == 0) ++roots;
  }
  if (roots != 1)
    throw StructureError(where + "expected exactly one root, found " +
                         std::to_string(roots));
  for (const MultiwordSpan& m : s.mwt) {
    if (m.start_id >= m.end_id || !s.contains(m.start_id) || !s.contains(m.end_id))
      throw StructureError(where + "multiword range " + std::to_string(m.start_id) +
                           "-" + std::to_string(m.end_id) + " is invalid");
  }
}

}  // namespace internal

// Parses a whole CoNLL-U document. `source` names the input in error messages.
// Throws ParseError for malformed lines and StructureError for sentences that
// violate tree invariants.
inline std::vector<Sentence> parse_conllu(std::string_view input,
                                          std::string_view source = "<input>") {
  std::vector<Sentence> out;
  std::size_t offset = 0;
  if (input.substr(0, 3) == "\xEF\xBB\xBF") offset = 3;

  Sentence cur;
  bool open = false;
  std::size_t ordinal = 0;

  auto finish = [&]() {
    if (!open) return;
    ++ordinal;
    if (cur.sent_id.empty()) cur.sent_id = std::to_string(ordinal);
    internal::check_structure(cur);
    out.push_back(std::move(cur));
    cur = Sentence{};
    open = false;
  };
  auto fail = [&](std::size_t at, const std::string& msg) {
    std::ostringstream ss;
    ss << source << ": byte " << at;
    if (!cur.sent_id.empty()) ss << " (sentence " << cur.sent_id << ")";
    ss << ": " << msg;
    throw ParseError(ss.str());
  };

  while (offset <= input.size()) {
    std::size_t nl = input.find('\n', offset);
    if (nl == std::string_view::npos) nl = input.size();
    std::string_view line = input.substr(offset, nl - offset);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_start = offset;
    offset = nl + 1;

    if (util::trim(line).empty()) {
      finish();
      continue;
    }
    open = true;
    if (line.front() == '#') {
      cur.comments.emplace_back(line);
      std::string_view body = util::trim(line.substr(1));
      if (body.rfind("sent_id", 0) == 0) {
        const std::size_t eq = body.find('=');
        if (eq != std::string_view::npos)
          cur.sent_id = std::string(util::trim(body.substr(eq + 1)));
      }
      continue;
    }

    const std::vector<std::string_view> cols = util::split(line, '\t');
    if (cols.size() != 10)
      fail(line_start, "expected 10 tab-separated columns, found " +
                           std::to_string(cols.size()));
    const std::string_view id_col = cols[0];

    if (id_col.find('.') != std::string_view::npos) continue;  // empty node

    const std::size_t dash = id_col.find('-');
    if (dash != std::string_view::npos) {
      MultiwordSpan m;
      if (!util::parse_int(id_col.substr(0, dash), &m.start_id) ||
          !util::parse_int(id_col.substr(dash + 1), &m.end_id))
        fail(line_start, "malformed multiword range '" + std::string(id_col) + "'");
      m.surface_form = std::string(cols[1]);
      m.space_after = internal::misc_space_after(cols[9]);
      cur.mwt.push_back(std::move(m));
      continue;
    }

    Token t;
    if (!util::parse_int(id_col, &t.id) || t.id < 1)
      fail(line_start, "non-numeric token id '" + std::string(id_col) + "'");
    if (!util::parse_int(cols[6], &t.head) || t.head < 0)
      fail(line_start, "non-numeric head '" + std::string(cols[6]) + "'");
    t.form = std::string(cols[1]);
    t.lemma = std::string(cols[2]);
    t.upos = std::string(cols[3]);
    t.xpos = std::string(cols[4]);
    t.feats = internal::parse_feats(cols[5]);
    t.deprel = std::string(cols[7]);
    t.space_after = internal::misc_space_after(cols[9]);
    cur.tokens.push_back(std::move(t));
  }
  finish();
  return out;
}

inline std::vector<Sentence> parse_conllu(std::istream& in,
                                          std::string_view source = "<stream>") {
  const std::string data{std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>()};
  return parse_conllu(std::string_view(data), source);
}

inline std::vector<Sentence> parse_conllu_file(const std::string& path) {
  const std::string data = util::read_file(path);
  return parse_conllu(std::string_view(data), path);
}

// Token lines only, no comments or multiword lines. FEATS come out in key
// order, MISC carries nothing but SpaceAfter.
inline std::string serialize_tokens(const Sentence& s) {
  std::string out;
  for (const Token& t : s.tokens) {
    std::string feats;
    for (const auto& [k, v] : t.feats) {
      if (!feats.empty()) feats += '|';
      feats += k + "=" + v;
    }
    out += std::to_string(t.id) + '\t' + t.form + '\t' + t.lemma + '\t' + t.upos +
           '\t' + (t.xpos.empty() ? "_" : t.xpos) + '\t' +
           (feats.empty() ? "_" : feats) + '\t' + std::to_string(t.head) + '\t' +
           t.deprel + "\t_\t" + (t.space_after ? "_" : "SpaceAfter=No") + '\n';
  }
  out += '\n';
  return out;
}

inline TokenId root_of(const Sentence& s) {
  for (const Token& t : s.tokens)
    if (t.head == 0) return t.id;
  throw StructureError("sentence " + s.sent_id + " has no root");
}

inline std::vector<TokenId> children_of(const Sentence& s, TokenId parent) {
  if (!s.contains(parent))
    throw ContractError("children_of: sentence " + s.sent_id +
                        " has no token " + std::to_string(parent));
  std::vector<TokenId> kids;
  for (const Token& t : s.tokens)
    if (t.head == parent) kids.push_back(t.id);
  return kids;
}

// Rebuilds running text from token forms and SpaceAfter. `# text` comments are
// never consulted. No space follows the final unit.
inline SurfaceText detokenize(const Sentence& s) {
  SurfaceText out;
  out.token_spans.resize(s.tokens.size());

  std::unordered_map<TokenId, const MultiwordSpan*> mwt_at;
  for (const MultiwordSpan& m : s.mwt) mwt_at.emplace(m.start_id, &m);

  std::size_t cursor = 0;  // in code points
  TokenId id = 1;
  const TokenId n = static_cast<TokenId>(s.tokens.size());
  while (id <= n) {
    std::string_view unit;
    bool space_after = true;
    TokenId last = id;
    if (auto it = mwt_at.find(id); it != mwt_at.end()) {
      unit = it->second->surface_form;
      space_after = it->second->space_after;
      last = it->second->end_id;
    } else {
      unit = s.tokens[static_cast<std::size_t>(id - 1)].form;
      space_after = s.tokens[static_cast<std::size_t>(id - 1)].space_after;
    }
    const CharSpan span{cursor, cursor + util::utf8_length(unit)};
    for (TokenId k = id; k <= last; ++k) {
      out.token_spans[static_cast<std::size_t>(k - 1)] = span;
      if (last != id) out.mwt_member.emplace(k, *mwt_at.at(id));
    }
    out.text += unit;
    cursor = span.end;
    id = last + 1;
    if (id <= n && space_after) {
      out.text += ' ';
      ++cursor;
    }
  }
  return out;
}

}  // namespace structbias
