#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "structbias/canonical_json.hpp"
#include "structbias/errors.hpp"
#include "structbias/extractors.hpp"
#include "structbias/stats.hpp"
#include "structbias/stimuli.hpp"
#include "structbias/util.hpp"

namespace structbias {

struct TreebankFile {
  std::string path;
  std::string sha256;
  std::size_t sentences = 0;
};

// What extraction produced, persisted next to the stimulus file.
struct ExtractionReport {
  std::string scheme_id;
  std::vector<TreebankFile> treebanks;
  std::size_t n_sentences = 0;
  std::size_t n_parallel = 0;
  std::size_t n_different = 0;
  std::map<std::string, std::size_t> exclusion_tally;
  bool personal_pronouns_only = false;
  std::string config_hash;
};

inline nlohmann::json extraction_to_json(const ExtractionReport& r) {
  nlohmann::json j;
  j["scheme_id"] = r.scheme_id;
  j["treebanks"] = nlohmann::json::array();
  for (const TreebankFile& t : r.treebanks)
    j["treebanks"].push_back({{"path", t.path}, {"sha256", t.sha256}, {"sentences", t.sentences}});
  j["n_sentences"] = r.n_sentences;
  j["n_parallel"] = r.n_parallel;
  j["n_different"] = r.n_different;
  j["exclusion_tally"] = r.exclusion_tally;
  j["personal_pronouns_only"] = r.personal_pronouns_only;
  j["config_hash"] = r.config_hash;
  j["tool_version"] = kToolVersion;
  return j;
}

inline ExtractionReport extraction_from_json(const nlohmann::json& j) {
  ExtractionReport r;
  try {
    r.scheme_id = j.at("scheme_id").get<std::string>();
    for (const auto& t : j.at("treebanks"))
      r.treebanks.push_back({t.at("path").get<std::string>(), t.at("sha256").get<std::string>(),
                             t.at("sentences").get<std::size_t>()});
    r.n_sentences = j.at("n_sentences").get<std::size_t>();
    r.n_parallel = j.at("n_parallel").get<std::size_t>();
    r.n_different = j.at("n_different").get<std::size_t>();
    r.exclusion_tally = j.at("exclusion_tally").get<std::map<std::string, std::size_t>>();
    r.personal_pronouns_only = j.value("personal_pronouns_only", false);
    r.config_hash = j.value("config_hash", "");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad extraction report: ") + e.what());
  }
  return r;
}

struct Provenance {
  std::vector<TreebankFile> treebanks;
  std::string stimuli_sha256;
  std::string mono_scores_sha256;
  std::string multi_scores_sha256;
  bool mask_target = true;
  std::string config_hash;
  std::string tool_version = std::string(kToolVersion);
};

struct Summary {
  std::string scheme_id;
  std::string mono_model_id;
  std::string multi_model_id;
  ScoreKind cell_kind = ScoreKind::kLogit;
  std::vector<MeanCell> cells;  // mono/parallel, mono/different, multi/parallel, multi/different
  BiasResult bias;
  std::size_t n_sentences = 0;
  std::map<std::string, std::size_t> exclusion_tally;
  Provenance provenance;
  std::string verdict;
};

inline constexpr double kSignificanceLevel = 0.05;

inline std::string verdict_for(const BiasResult& b) {
  const std::string p = util::format_double(b.p_value, 4);
  if (b.p_value < kSignificanceLevel && b.delta > 0.0)
    return "multilingual prefers English-parallel structure (p=" + p + ")";
  return "no significant multilingual preference for English-parallel structure (p=" + p + ")";
}

// `cell_scores` feed the four mean cells; `bias` was computed from the same
// score files, possibly on a different score kind.
inline Summary build_summary(const ExtractionReport& extraction,
                             const std::vector<Stimulus>& stimuli,
                             const PairedCorpusScores& cell_scores, const BiasResult& bias,
                             Provenance provenance, std::size_t n_resamples,
                             std::uint64_t seed) {
  std::set<std::string> stim_par, stim_diff, sc_par, sc_diff;
  for (const Stimulus& st : stimuli)
    (st.corpus_label == CorpusLabel::kParallel ? stim_par : stim_diff).insert(st.stimulus_id);
  for (const PairedScore& p : cell_scores.parallel) sc_par.insert(p.stimulus_id);
  for (const PairedScore& p : cell_scores.different) sc_diff.insert(p.stimulus_id);
  if (stim_par != sc_par || stim_diff != sc_diff)
    throw ConsistencyError("score ids do not match stimulus ids");
  if (stim_par.size() != extraction.n_parallel || stim_diff.size() != extraction.n_different)
    throw ConsistencyError("stimulus counts do not match the extraction report");
  if (bias.n_parallel != stim_par.size() || bias.n_different != stim_diff.size())
    throw ConsistencyError("bias result counts do not match the stimuli");
  if (!extraction.scheme_id.empty() && !bias.scheme_id.empty() &&
      extraction.scheme_id != bias.scheme_id)
    throw ConsistencyError("scheme mismatch: " + extraction.scheme_id + " vs " + bias.scheme_id);

  Summary s;
  s.scheme_id = extraction.scheme_id;
  s.mono_model_id = bias.mono_model_id;
  s.multi_model_id = bias.multi_model_id;
  s.cell_kind = cell_scores.kind;
  s.cells = summarize_means(cell_scores, n_resamples, seed);
  s.bias = bias;
  s.n_sentences = extraction.n_sentences;
  s.exclusion_tally = extraction.exclusion_tally;
  s.provenance = std::move(provenance);
  if (s.provenance.treebanks.empty()) s.provenance.treebanks = extraction.treebanks;
  s.verdict = verdict_for(bias);
  return s;
}

inline nlohmann::json summary_to_json(const Summary& s) {
  nlohmann::json j;
  j["scheme_id"] = s.scheme_id;
  j["mono_model_id"] = s.mono_model_id;
  j["multi_model_id"] = s.multi_model_id;
  j["cell_score_kind"] = to_string(s.cell_kind);
  j["cells"] = nlohmann::json::array();
  for (const MeanCell& c : s.cells)
    j["cells"].push_back({{"model", c.model},
                          {"model_id", c.model == "mono" ? s.mono_model_id : s.multi_model_id},
                          {"corpus_label", to_string(c.corpus)},
                          {"n", c.n},
                          {"mean", c.mean},
                          {"ci_low", c.ci_low},
                          {"ci_high", c.ci_high}});
  j["bias"] = bias_to_json(s.bias);
  j["n_sentences"] = s.n_sentences;
  j["exclusion_tally"] = s.exclusion_tally;
  nlohmann::json prov;
  prov["treebanks"] = nlohmann::json::array();
  for (const TreebankFile& t : s.provenance.treebanks)
    prov["treebanks"].push_back({{"path", t.path}, {"sha256", t.sha256}, {"sentences", t.sentences}});
  prov["stimuli_sha256"] = s.provenance.stimuli_sha256;
  prov["mono_scores_sha256"] = s.provenance.mono_scores_sha256;
  prov["multi_scores_sha256"] = s.provenance.multi_scores_sha256;
  prov["mask_target"] = s.provenance.mask_target;
  prov["score_kind"] = to_string(s.bias.score_kind);
  prov["config_hash"] = s.provenance.config_hash;
  prov["tool_version"] = s.provenance.tool_version;
  j["provenance"] = prov;
  j["verdict"] = s.verdict;
  return j;
}

enum class ReportFormat { kJson, kCsv, kMarkdown };

inline ReportFormat report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  throw ConfigError("unknown report format '" + std::string(s) + "'");
}

namespace internal {

inline std::string csv_field(std::string_view v) {
  if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace internal

inline std::string emit_csv(const Summary& s) {
  using internal::csv_field;
  std::string out = "scheme_id,model_id,corpus_label,metric,value,ci_low,ci_high\n";
  const std::string metric = "mean_" + std::string(to_string(s.cell_kind));
  for (const MeanCell& c : s.cells) {
    out += csv_field(s.scheme_id) + ',' +
           csv_field(c.model == "mono" ? s.mono_model_id : s.multi_model_id) + ',' +
           std::string(to_string(c.corpus)) + ',' + metric + ',' +
           util::format_double(c.mean) + ',' + util::format_double(c.ci_low) + ',' +
           util::format_double(c.ci_high) + '\n';
  }
  out += csv_field(s.scheme_id) + ',' + csv_field(s.multi_model_id + " vs " + s.mono_model_id) +
         ",parallel/different,delta_log_ratio_" + std::string(to_string(s.bias.score_kind)) +
         ',' + util::format_double(s.bias.delta) + ',' + util::format_double(s.bias.ci_low) +
         ',' + util::format_double(s.bias.ci_high) + '\n';
  return out;
}

inline std::string emit_markdown(const Summary& s) {
  const auto f = [](double v) { return util::format_double(v, 6); };
  std::string out;
  out += "## " + s.scheme_id + ": " + s.multi_model_id + " vs " + s.mono_model_id + "\n\n";
  out += "| model | corpus | n | mean " + std::string(to_string(s.cell_kind)) +
         " | 95% CI |\n";
  out += "|---|---|---|---|---|\n";
  for (const MeanCell& c : s.cells)
    out += "| " + (c.model == "mono" ? s.mono_model_id : s.multi_model_id) + " (" + c.model +
           ") | " + std::string(to_string(c.corpus)) + " | " + std::to_string(c.n) + " | " +
           f(c.mean) + " | [" + f(c.ci_low) + ", " + f(c.ci_high) + "] |\n";
  out += "\n";
  out += "| statistic | r_mono | r_multi | delta | 95% CI | p |\n";
  out += "|---|---|---|---|---|---|\n";
  out += "| ln r_multi - ln r_mono (" + std::string(to_string(s.bias.score_kind)) + ") | " +
         f(s.bias.r_mono) + " | " + f(s.bias.r_multi) + " | " + f(s.bias.delta) + " | [" +
         f(s.bias.ci_low) + ", " + f(s.bias.ci_high) + "] | " + f(s.bias.p_value) + " |\n";
  out += "\n**Verdict:** " + s.verdict + "\n";
  return out;
}

inline std::string emit(const Summary& s, ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: return canonical_dump(summary_to_json(s));
    case ReportFormat::kCsv: return emit_csv(s);
    case ReportFormat::kMarkdown: return emit_markdown(s);
  }
  return {};
}

}  // namespace structbias
