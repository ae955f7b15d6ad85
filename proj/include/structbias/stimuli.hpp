#pragma once

#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "structbias/errors.hpp"
#include "structbias/extractors.hpp"
#include "structbias/treebank.hpp"
#include "structbias/util.hpp"

namespace structbias {

// One scorer-ready sentence. Character offsets count Unicode scalar values.
struct Stimulus {
  std::string stimulus_id;
  CorpusLabel corpus_label = CorpusLabel::kParallel;
  std::string scheme_id;
  std::string text;
  std::size_t target_char_start = 0;
  std::size_t target_char_end = 0;
  std::string target_form;
  TokenId target_token_id = 0;

  friend bool operator==(const Stimulus&, const Stimulus&) = default;
};

// Empty string when the stimulus is well formed, else a description.
inline std::string span_defect(const Stimulus& st) {
  const std::size_t len = util::utf8_length(st.text);
  if (!(st.target_char_start < st.target_char_end && st.target_char_end <= len))
    return "span [" + std::to_string(st.target_char_start) + ", " +
           std::to_string(st.target_char_end) + ") outside text of length " +
           std::to_string(len);
  const auto slice = util::utf8_slice(st.text, st.target_char_start, st.target_char_end);
  if (!slice || *slice != st.target_form)
    return "span covers '" + std::string(slice.value_or("")) + "', expected '" +
           st.target_form + "'";
  return {};
}

inline Stimulus build_stimulus(const Sentence& s, const Classification& c,
                               const ConstructionScheme& scheme,
                               const SurfaceText& surface,
                               std::string_view treebank_name) {
  const auto target = target_of(c);
  if (!target)
    throw ContractError("build_stimulus: sentence " + s.sent_id + " is excluded");
  if (!s.contains(*target))
    throw ContractError("build_stimulus: target " + std::to_string(*target) +
                        " not in sentence " + s.sent_id);
  Stimulus st;
  st.stimulus_id = std::string(treebank_name) + ":" + s.sent_id;
  st.corpus_label = std::holds_alternative<Parallel>(c) ? CorpusLabel::kParallel
                                                        : CorpusLabel::kDifferent;
  st.scheme_id = scheme.scheme_id;
  st.text = surface.text;
  const CharSpan span = surface.span_of(*target);
  st.target_char_start = span.start;
  st.target_char_end = span.end;
  st.target_form = std::string(surface.surface_of(*target));
  st.target_token_id = *target;
  return st;
}

// Detokenizes and converts every entry of both corpora, parallel first.
inline std::vector<Stimulus> build_stimuli(const CorpusPair& corpora,
                                           const ConstructionScheme& scheme,
                                           std::string_view treebank_name) {
  std::vector<Stimulus> out;
  out.reserve(corpora.parallel.size() + corpora.different.size());
  for (const CorpusEntry& e : corpora.parallel)
    out.push_back(build_stimulus(*e.sentence, Parallel{e.target_id}, scheme,
                                 detokenize(*e.sentence), treebank_name));
  for (const CorpusEntry& e : corpora.different)
    out.push_back(build_stimulus(*e.sentence, Different{e.target_id}, scheme,
                                 detokenize(*e.sentence), treebank_name));
  return out;
}

inline nlohmann::ordered_json stimulus_to_json(const Stimulus& st) {
  nlohmann::ordered_json j;
  j["stimulus_id"] = st.stimulus_id;
  j["corpus_label"] = to_string(st.corpus_label);
  j["scheme_id"] = st.scheme_id;
  j["text"] = st.text;
  j["target_char_start"] = st.target_char_start;
  j["target_char_end"] = st.target_char_end;
  j["target_form"] = st.target_form;
  j["target_token_id"] = st.target_token_id;
  return j;
}

inline Stimulus stimulus_from_json(const nlohmann::json& j) {
  Stimulus st;
  st.stimulus_id = j.at("stimulus_id").get<std::string>();
  st.corpus_label = corpus_label_from_string(j.at("corpus_label").get<std::string>());
  st.scheme_id = j.at("scheme_id").get<std::string>();
  st.text = j.at("text").get<std::string>();
  const auto start = j.at("target_char_start").get<long long>();
  const auto end = j.at("target_char_end").get<long long>();
  if (start < 0 || end < 0)
    throw ValidationError("stimulus " + st.stimulus_id + ": negative offset");
  st.target_char_start = static_cast<std::size_t>(start);
  st.target_char_end = static_cast<std::size_t>(end);
  st.target_form = j.at("target_form").get<std::string>();
  st.target_token_id = j.value("target_token_id", 0);
  return st;
}

inline void write_stimuli(const std::vector<Stimulus>& stimuli, std::ostream& out) {
  for (const Stimulus& st : stimuli) out << stimulus_to_json(st).dump() << '\n';
}

inline std::string stimuli_to_jsonl(const std::vector<Stimulus>& stimuli) {
  std::string out;
  for (const Stimulus& st : stimuli) out += stimulus_to_json(st).dump() + '\n';
  return out;
}

// Parses and validates a stimulus file: every span must slice out its
// target_form and ids must be unique.
inline std::vector<Stimulus> read_stimuli(std::string_view data,
                                          std::string_view source = "<stimuli>") {
  std::vector<Stimulus> out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (std::string_view line : util::split(data, '\n')) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    Stimulus st;
    try {
      st = stimulus_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": malformed stimulus: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (const std::string d = span_defect(st); !d.empty())
      throw ValidationError(where + ": stimulus " + st.stimulus_id + ": " + d);
    if (!seen.insert(st.stimulus_id).second)
      throw ValidationError(where + ": duplicate stimulus_id " + st.stimulus_id);
    out.push_back(std::move(st));
  }
  return out;
}

inline std::vector<Stimulus> read_stimuli_file(const std::string& path) {
  return read_stimuli(util::read_file(path), path);
}

}  // namespace structbias
