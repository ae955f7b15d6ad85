#pragma once

// Sorting sentences into the English-parallel and English-different corpora.
//
// A ConstructionScheme is data: the two built-in schemes are ordinary
// instances, and custom schemes load from JSON with the same fields.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "structbias/errors.hpp"
#include "structbias/treebank.hpp"
#include "structbias/util.hpp"

namespace structbias {

enum class CorpusLabel { kParallel, kDifferent };

inline std::string_view to_string(CorpusLabel l) {
  return l == CorpusLabel::kParallel ? "parallel" : "different";
}

inline CorpusLabel corpus_label_from_string(std::string_view s) {
  if (s == "parallel") return CorpusLabel::kParallel;
  if (s == "different") return CorpusLabel::kDifferent;
  throw ValidationError("unknown corpus_label '" + std::string(s) + "'");
}

enum class ExclusionReason {
  kNotVerbRooted,
  kHaberRooted,
  kImpersonalSe,
  kLexicalSubject,
  kNoLexicalSubject,
  kOther,
};

inline std::string_view to_string(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::kNotVerbRooted: return "not-verb-rooted";
    case ExclusionReason::kHaberRooted: return "haber-rooted";
    case ExclusionReason::kImpersonalSe: return "impersonal-se";
    case ExclusionReason::kLexicalSubject: return "lexical-subject";
    case ExclusionReason::kNoLexicalSubject: return "no-lexical-subject";
    case ExclusionReason::kOther: return "other";
  }
  return "other";
}

// How a sentence with a root of the right kind is split between corpora.
enum class SplitRule {
  // Parallel when a subject child has one of subject_upos; Different when the
  // root has no subject child at all; otherwise excluded (lexical-subject).
  kSubjectPresence,
  // Needs a subject child with one of subject_upos (lowest id wins).
  // Parallel when it precedes the root, Different when it follows.
  kSubjectOrder,
};

enum class TargetSelector {
  kRoot,
  // Whichever of subject and root comes first in the sentence.
  kFirstOfSubjectAndVerb,
};

// A child of the root that disqualifies the sentence, e.g. impersonal "se".
struct ChildMarker {
  std::string form;           // compared after ASCII lowercasing
  std::string deprel_prefix;  // matched against the full deprel
};

struct ConstructionScheme {
  std::string scheme_id;
  std::string language_code;
  std::string description;
  std::string root_upos = "VERB";
  std::vector<std::string> excluded_root_lemmas;
  std::vector<ChildMarker> excluded_root_children;
  std::vector<std::string> subject_deprels = {"nsubj"};  // compared to deprel base
  std::set<std::string> subject_upos;
  SplitRule split = SplitRule::kSubjectPresence;
  TargetSelector target = TargetSelector::kRoot;
  // Subject must also carry PronType=Prs.
  bool personal_pronouns_only = false;
};

inline ConstructionScheme spanish_prodrop_scheme(bool personal_pronouns_only = false) {
  ConstructionScheme s;
  s.scheme_id = "spanish-prodrop";
  s.language_code = "es";
  s.description =
      "Explicit pronoun subject of the root verb (parallel) vs. no nominal "
      "subject at all (different); target is the root verb.";
  s.excluded_root_lemmas = {"haber"};
  s.excluded_root_children = {{"se", "expl"}};
  s.subject_upos = {"PRON"};
  s.split = SplitRule::kSubjectPresence;
  s.target = TargetSelector::kRoot;
  s.personal_pronouns_only = personal_pronouns_only;
  return s;
}

inline ConstructionScheme greek_subject_verb_scheme() {
  ConstructionScheme s;
  s.scheme_id = "greek-subject-verb";
  s.language_code = "el";
  s.description =
      "Lexical subject before the root verb (parallel) vs. after it "
      "(different); target is whichever of the two comes first.";
  s.subject_upos = {"NOUN", "PROPN"};
  s.split = SplitRule::kSubjectOrder;
  s.target = TargetSelector::kFirstOfSubjectAndVerb;
  return s;
}

inline std::vector<std::string> builtin_scheme_ids() {
  return {"spanish-prodrop", "greek-subject-verb"};
}

inline ConstructionScheme builtin_scheme(std::string_view scheme_id,
                                         bool personal_pronouns_only = false) {
  if (scheme_id == "spanish-prodrop") return spanish_prodrop_scheme(personal_pronouns_only);
  if (scheme_id == "greek-subject-verb") {
    ConstructionScheme s = greek_subject_verb_scheme();
    s.personal_pronouns_only = personal_pronouns_only;
    return s;
  }
  throw ConfigError("unknown scheme_id '" + std::string(scheme_id) + "'");
}

// Custom scheme from a JSON object. Keys mirror ConstructionScheme fields;
// "split" is "subject-presence" or "subject-order", "target" is "root" or
// "first-of-subject-and-verb", and "excluded_root_children" is a list of
// {"form": ..., "deprel_prefix": ...}.
inline ConstructionScheme scheme_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("scheme config must be a JSON object");
  static const std::set<std::string> kKnown = {
      "scheme_id", "language_code", "description", "root_upos",
      "excluded_root_lemmas", "excluded_root_children", "subject_deprels",
      "subject_upos", "split", "target", "personal_pronouns_only"};
  for (const auto& [k, _] : j.items())
    if (!kKnown.count(k)) throw ConfigError("unknown scheme key '" + k + "'");

  ConstructionScheme s;
  try {
    s.scheme_id = j.at("scheme_id").get<std::string>();
    if (s.scheme_id == "spanish-prodrop" || s.scheme_id == "greek-subject-verb")
      throw ConfigError("custom scheme may not reuse built-in id '" + s.scheme_id + "'");
    s.language_code = j.value("language_code", "");
    s.description = j.value("description", "");
    s.root_upos = j.value("root_upos", "VERB");
    s.excluded_root_lemmas =
        j.value("excluded_root_lemmas", std::vector<std::string>{});
    for (const auto& c : j.value("excluded_root_children", nlohmann::json::array()))
      s.excluded_root_children.push_back(
          {c.at("form").get<std::string>(), c.at("deprel_prefix").get<std::string>()});
    s.subject_deprels =
        j.value("subject_deprels", std::vector<std::string>{"nsubj"});
    const auto upos = j.at("subject_upos").get<std::vector<std::string>>();
    s.subject_upos = {upos.begin(), upos.end()};
    const std::string split = j.at("split").get<std::string>();
    if (split == "subject-presence") {
      s.split = SplitRule::kSubjectPresence;
    } else if (split == "subject-order") {
      s.split = SplitRule::kSubjectOrder;
    } else {
      throw ConfigError("unknown split rule '" + split + "'");
    }
    const std::string target = j.value("target", "root");
    if (target == "root") {
      s.target = TargetSelector::kRoot;
    } else if (target == "first-of-subject-and-verb") {
      s.target = TargetSelector::kFirstOfSubjectAndVerb;
    } else {
      throw ConfigError("unknown target selector '" + target + "'");
    }
    s.personal_pronouns_only = j.value("personal_pronouns_only", false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scheme config: ") + e.what());
  }
  if (s.subject_upos.empty()) throw ConfigError("subject_upos must not be empty");
  if (s.target == TargetSelector::kFirstOfSubjectAndVerb &&
      s.split != SplitRule::kSubjectOrder)
    throw ConfigError("target 'first-of-subject-and-verb' needs split 'subject-order'");
  return s;
}

// ---------------------------------------------------------------------------

struct Parallel {
  TokenId target_id;
  friend bool operator==(const Parallel&, const Parallel&) = default;
};
struct Different {
  TokenId target_id;
  friend bool operator==(const Different&, const Different&) = default;
};
struct Excluded {
  ExclusionReason reason;
  friend bool operator==(const Excluded&, const Excluded&) = default;
};

using Classification = std::variant<Parallel, Different, Excluded>;

inline std::optional<TokenId> target_of(const Classification& c) {
  if (auto* p = std::get_if<Parallel>(&c)) return p->target_id;
  if (auto* d = std::get_if<Different>(&c)) return d->target_id;
  return std::nullopt;
}

inline Classification classify(const Sentence& s, const ConstructionScheme& scheme) {
  const TokenId root = root_of(s);
  const Token& root_tok = s.token(root);
  if (root_tok.upos != scheme.root_upos) return Excluded{ExclusionReason::kNotVerbRooted};

  if (std::find(scheme.excluded_root_lemmas.begin(), scheme.excluded_root_lemmas.end(),
                root_tok.lemma) != scheme.excluded_root_lemmas.end())
    return Excluded{root_tok.lemma == "haber" ? ExclusionReason::kHaberRooted
                                              : ExclusionReason::kOther};

  const std::vector<TokenId> kids = children_of(s, root);
  for (TokenId k : kids) {
    const Token& t = s.token(k);
    const std::string form = util::ascii_lower(t.form);
    for (const ChildMarker& m : scheme.excluded_root_children)
      if (form == m.form && t.deprel.rfind(m.deprel_prefix, 0) == 0)
        return Excluded{m.form == "se" ? ExclusionReason::kImpersonalSe
                                       : ExclusionReason::kOther};
  }

  auto is_subject = [&](const Token& t) {
    return std::find(scheme.subject_deprels.begin(), scheme.subject_deprels.end(),
                     t.deprel_base()) != scheme.subject_deprels.end();
  };
  auto qualifies = [&](const Token& t) {
    return scheme.subject_upos.count(t.upos) > 0 &&
           (!scheme.personal_pronouns_only || t.has_feat("PronType", "Prs"));
  };

  std::vector<TokenId> subjects;
  for (TokenId k : kids)
    if (is_subject(s.token(k))) subjects.push_back(k);

  TokenId subject = 0;
  for (TokenId k : subjects) {
    if (qualifies(s.token(k))) {
      subject = k;
      break;  // kids are ascending, so this is the lowest id
    }
  }

  auto pick_target = [&](bool subject_first) {
    if (scheme.target == TargetSelector::kRoot) return root;
    return subject_first ? subject : root;
  };

  switch (scheme.split) {
    case SplitRule::kSubjectPresence:
      if (subject != 0) return Parallel{pick_target(false)};
      if (subjects.empty()) return Different{pick_target(false)};
      return Excluded{ExclusionReason::kLexicalSubject};
    case SplitRule::kSubjectOrder:
      if (subject == 0) return Excluded{ExclusionReason::kNoLexicalSubject};
      if (subject < root) return Parallel{pick_target(true)};
      return Different{pick_target(false)};
  }
  return Excluded{ExclusionReason::kOther};
}

struct CorpusEntry {
  const Sentence* sentence;
  TokenId target_id;
};

struct CorpusPair {
  std::vector<CorpusEntry> parallel;
  std::vector<CorpusEntry> different;
  std::map<std::string, std::size_t> exclusion_tally;

  std::size_t excluded() const {
    std::size_t n = 0;
    for (const auto& [_, c] : exclusion_tally) n += c;
    return n;
  }
};

// Entries point into `sentences`, which must outlive the result.
inline CorpusPair extract_corpora(const std::vector<Sentence>& sentences,
                                  const ConstructionScheme& scheme) {
  CorpusPair out;
  for (const Sentence& s : sentences) {
    const Classification c = classify(s, scheme);
    if (auto* p = std::get_if<Parallel>(&c)) {
      out.parallel.push_back({&s, p->target_id});
    } else if (auto* d = std::get_if<Different>(&c)) {
      out.different.push_back({&s, d->target_id});
    } else {
      ++out.exclusion_tally[std::string(to_string(std::get<Excluded>(c).reason))];
    }
  }
  return out;
}

}  // namespace structbias
