#pragma once

// File-level stages behind the command-line tool: extract, score, analyze,
// report. Each stage reads and writes plain files so scorers can run
// elsewhere and stages can be rerun independently.

#include <filesystem>
#include <future>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "structbias/canonical_json.hpp"
#include "structbias/errors.hpp"
#include "structbias/extractors.hpp"
#include "structbias/report.hpp"
#include "structbias/scoring.hpp"
#include "structbias/stats.hpp"
#include "structbias/stimuli.hpp"
#include "structbias/treebank.hpp"
#include "structbias/util.hpp"

namespace structbias {

namespace fs = std::filesystem;

struct RunConfig {
  std::vector<std::string> treebanks;
  std::string scheme = "spanish-prodrop";  // built-in id or path to a JSON scheme
  bool personal_pronouns_only = false;
  ScorerEndpoint mono{EndpointKind::kSubprocess, "", "mono", 64, true, ""};
  ScorerEndpoint multi{EndpointKind::kSubprocess, "", "multi", 64, true, ""};
  ScoreKind score_kind = ScoreKind::kProbability;
  bool mask_target = true;
  std::size_t n_resamples = kDefaultResamples;
  std::uint64_t seed = 0;
  std::string cache_dir;  // empty: no cache
  std::string output_dir = ".";
  std::vector<ReportFormat> formats = {ReportFormat::kJson, ReportFormat::kCsv,
                                       ReportFormat::kMarkdown};
};

// Hash of the settings that determine analysis results. Paths are left out so
// the same experiment hashes the same wherever it runs.
inline std::string config_hash(const RunConfig& c) {
  nlohmann::json j;
  j["scheme"] = fs::path(c.scheme).filename().string();
  j["personal_pronouns_only"] = c.personal_pronouns_only;
  j["mono_model_id"] = c.mono.model_id;
  j["multi_model_id"] = c.multi.model_id;
  j["score_kind"] = to_string(c.score_kind);
  j["mask_target"] = c.mask_target;
  j["n_resamples"] = c.n_resamples;
  j["seed"] = c.seed;
  return util::sha256_hex(canonical_dump(j)).substr(0, 16);
}

inline ConstructionScheme resolve_scheme(const std::string& scheme, bool personal_pronouns_only) {
  for (const std::string& id : builtin_scheme_ids())
    if (scheme == id) return builtin_scheme(id, personal_pronouns_only);
  if (!fs::exists(scheme))
    throw ConfigError("unknown scheme '" + scheme + "' (not a built-in id or a file)");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(util::read_file(scheme));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scheme file " + scheme + ": " + e.what());
  }
  ConstructionScheme s = scheme_from_json(j);
  if (personal_pronouns_only) s.personal_pronouns_only = true;
  return s;
}

struct OutputPaths {
  fs::path dir;
  fs::path stimuli() const { return dir / "stimuli.jsonl"; }
  fs::path extraction() const { return dir / "extraction.json"; }
  fs::path scores(const std::string& model_id) const {
    std::string safe;
    for (char c : model_id)
      safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
    return dir / ("scores." + safe + ".jsonl");
  }
  fs::path bias() const { return dir / "bias.json"; }
  fs::path summary(ReportFormat f) const {
    switch (f) {
      case ReportFormat::kJson: return dir / "summary.json";
      case ReportFormat::kCsv: return dir / "summary.csv";
      case ReportFormat::kMarkdown: return dir / "summary.md";
    }
    return dir / "summary";
  }
};

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
}

// Hash of the records of a score file, excluding its header line (which holds
// a creation time).
inline std::string score_records_sha256(const std::string& path) {
  const std::string data = util::read_file(path);
  const std::size_t nl = data.find('\n');
  return util::sha256_hex(nl == std::string::npos ? std::string_view{}
                                                  : std::string_view(data).substr(nl + 1));
}

// ---------------------------------------------------------------------------

inline ExtractionReport cmd_extract(const RunConfig& cfg, std::ostream& log) {
  if (cfg.treebanks.empty()) throw ConfigError("no treebank given");
  const ConstructionScheme scheme = resolve_scheme(cfg.scheme, cfg.personal_pronouns_only);
  const OutputPaths out{cfg.output_dir};
  ensure_dir(out.dir);

  ExtractionReport report;
  report.scheme_id = scheme.scheme_id;
  report.personal_pronouns_only = scheme.personal_pronouns_only;
  report.config_hash = config_hash(cfg);
  std::vector<Stimulus> stimuli_par, stimuli_diff;
  for (const std::string& path : cfg.treebanks) {
    if (!fs::exists(path)) throw IoError("treebank not found: " + path);
    const std::string data = util::read_file(path);
    const std::vector<Sentence> sentences = parse_conllu(data, path);
    const CorpusPair corpora = extract_corpora(sentences, scheme);
    const std::string name = fs::path(path).stem().string();
    for (const CorpusEntry& e : corpora.parallel)
      stimuli_par.push_back(build_stimulus(*e.sentence, Parallel{e.target_id}, scheme,
                                           detokenize(*e.sentence), name));
    for (const CorpusEntry& e : corpora.different)
      stimuli_diff.push_back(build_stimulus(*e.sentence, Different{e.target_id}, scheme,
                                            detokenize(*e.sentence), name));
    for (const auto& [reason, n] : corpora.exclusion_tally) report.exclusion_tally[reason] += n;
    report.treebanks.push_back({path, util::sha256_hex(data), sentences.size()});
    report.n_sentences += sentences.size();
  }
  report.n_parallel = stimuli_par.size();
  report.n_different = stimuli_diff.size();

  std::vector<Stimulus> stimuli = std::move(stimuli_par);
  stimuli.insert(stimuli.end(), stimuli_diff.begin(), stimuli_diff.end());
  {
    std::set<std::string> ids;
    for (const Stimulus& st : stimuli)
      if (!ids.insert(st.stimulus_id).second)
        throw ValidationError("duplicate stimulus id " + st.stimulus_id +
                              " (repeated sent_id in the treebank?)");
  }
  util::write_file(out.stimuli().string(), stimuli_to_jsonl(stimuli));
  util::write_file(out.extraction().string(), canonical_dump(extraction_to_json(report)));

  log << "scheme: " << report.scheme_id << "\n"
      << "sentences: " << report.n_sentences << "\n"
      << "parallel: " << report.n_parallel << "\n"
      << "different: " << report.n_different << "\n";
  for (const auto& [reason, n] : report.exclusion_tally)
    log << "excluded " << reason << ": " << n << "\n";
  log << "wrote " << out.stimuli().string() << "\n";
  return report;
}

struct ScoreOutcome {
  std::string path;
  ScoreRunStats stats;
};

inline ScoreOutcome cmd_score(const RunConfig& cfg, const std::string& stimuli_path,
                              const ScorerEndpoint& endpoint,
                              const std::string& output_path = "") {
  const std::vector<Stimulus> stimuli = read_stimuli_file(stimuli_path);
  if (stimuli.empty()) throw ValidationError("stimulus file is empty: " + stimuli_path);
  std::optional<ScoreCache> cache;
  if (!cfg.cache_dir.empty()) cache.emplace(cfg.cache_dir);
  ScoreRunStats stats;
  const auto records = score_all(stimuli, endpoint, cache ? &*cache : nullptr, &stats);

  ScoreFileHeader h;
  h.model_id = endpoint.model_id;
  h.scheme_id = stimuli.front().scheme_id;
  h.created = iso8601_now();
  h.mask_target = endpoint.mask_target;
  h.config_hash = config_hash(cfg);
  h.stimuli_sha256 = util::sha256_hex(util::read_file(stimuli_path));
  h.model_revision = endpoint.model_revision;
  const OutputPaths out{cfg.output_dir};
  const fs::path path = output_path.empty() ? out.scores(endpoint.model_id) : fs::path(output_path);
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  util::write_file(path.string(), score_file_contents(h, records));
  return {path.string(), stats};
}

struct AnalysisInputs {
  std::vector<Stimulus> stimuli;
  ScoreFile mono;
  ScoreFile multi;
  std::string stimuli_sha256;
  std::string mono_sha256;
  std::string multi_sha256;
};

inline AnalysisInputs load_analysis_inputs(const std::string& stimuli_path,
                                           const std::string& mono_path,
                                           const std::string& multi_path) {
  for (const std::string& p : {stimuli_path, mono_path, multi_path})
    if (!fs::exists(p)) throw IoError("file not found: " + p);
  AnalysisInputs in;
  in.stimuli = read_stimuli_file(stimuli_path);
  in.mono = read_score_file(mono_path);
  in.multi = read_score_file(multi_path);
  in.stimuli_sha256 = util::sha256_hex(util::read_file(stimuli_path));
  in.mono_sha256 = score_records_sha256(mono_path);
  in.multi_sha256 = score_records_sha256(multi_path);
  for (const ScoreFile* f : {&in.mono, &in.multi}) {
    const ScoreValidation v = validate_scores(in.stimuli, f->records);
    if (!v.ok()) {
      std::string msg = "score file for " + f->header.model_id + " is inconsistent:";
      for (std::size_t i = 0; i < v.defects.size() && i < 10; ++i) msg += "\n  " + v.defects[i];
      throw ConsistencyError(msg);
    }
  }
  return in;
}

// Model ids in the config hash come from the score files.
inline RunConfig with_model_ids(RunConfig cfg, const AnalysisInputs& in) {
  cfg.mono.model_id = in.mono.header.model_id;
  cfg.multi.model_id = in.multi.header.model_id;
  cfg.mask_target = in.mono.header.mask_target;
  return cfg;
}

inline nlohmann::json cmd_analyze(const RunConfig& run_cfg, const std::string& stimuli_path,
                                  const std::string& mono_path, const std::string& multi_path) {
  const AnalysisInputs in = load_analysis_inputs(stimuli_path, mono_path, multi_path);
  const RunConfig cfg = with_model_ids(run_cfg, in);
  const PairedCorpusScores scores =
      pair_scores(in.stimuli, in.mono.records, in.multi.records, cfg.score_kind);
  BiasResult r = bootstrap_compare(scores, cfg.n_resamples, cfg.seed);
  r.scheme_id = in.stimuli.empty() ? "" : in.stimuli.front().scheme_id;
  r.mono_model_id = in.mono.header.model_id;
  r.multi_model_id = in.multi.header.model_id;

  nlohmann::json j = bias_to_json(r);
  j["config_hash"] = config_hash(cfg);
  j["mask_target"] = in.mono.header.mask_target;
  j["inputs"] = {{"stimuli_sha256", in.stimuli_sha256},
                 {"mono_scores_sha256", in.mono_sha256},
                 {"multi_scores_sha256", in.multi_sha256}};
  const OutputPaths out{cfg.output_dir};
  ensure_dir(out.dir);
  util::write_file(out.bias().string(), canonical_dump(j));
  return j;
}

inline Summary cmd_report(const RunConfig& run_cfg, const std::string& extraction_path,
                          const std::string& stimuli_path, const std::string& mono_path,
                          const std::string& multi_path, const std::string& bias_path) {
  for (const std::string& p : {extraction_path, bias_path})
    if (!fs::exists(p)) throw IoError("file not found: " + p);
  const AnalysisInputs in = load_analysis_inputs(stimuli_path, mono_path, multi_path);
  RunConfig cfg = with_model_ids(run_cfg, in);
  nlohmann::json bias_json;
  try {
    bias_json = nlohmann::json::parse(util::read_file(bias_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(bias_path + ": " + e.what());
  }
  const BiasResult bias = bias_from_json(bias_json);
  if (bias_json.contains("inputs")) {
    const auto& inputs = bias_json["inputs"];
    if (inputs.value("mono_scores_sha256", "") != in.mono_sha256 ||
        inputs.value("multi_scores_sha256", "") != in.multi_sha256 ||
        inputs.value("stimuli_sha256", "") != in.stimuli_sha256)
      throw ConsistencyError("bias result was computed from different input files");
  }
  nlohmann::json ext_json;
  try {
    ext_json = nlohmann::json::parse(util::read_file(extraction_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(extraction_path + ": " + e.what());
  }
  const ExtractionReport extraction = extraction_from_json(ext_json);

  const PairedCorpusScores cell_scores =
      pair_scores(in.stimuli, in.mono.records, in.multi.records, ScoreKind::kLogit);
  Provenance prov;
  prov.treebanks = extraction.treebanks;
  prov.stimuli_sha256 = in.stimuli_sha256;
  prov.mono_scores_sha256 = in.mono_sha256;
  prov.multi_scores_sha256 = in.multi_sha256;
  prov.mask_target = in.mono.header.mask_target;
  prov.config_hash = config_hash(cfg);
  const Summary s = build_summary(extraction, in.stimuli, cell_scores, bias, prov,
                                  bias.n_resamples, bias.seed);
  const OutputPaths out{cfg.output_dir};
  ensure_dir(out.dir);
  for (ReportFormat f : cfg.formats) util::write_file(out.summary(f).string(), emit(s, f));
  return s;
}

// extract -> score(mono) and score(multi) concurrently -> analyze -> report.
inline Summary cmd_run(const RunConfig& cfg, std::ostream& log) {
  const OutputPaths out{cfg.output_dir};
  cmd_extract(cfg, log);
  if (cfg.mono.model_id == cfg.multi.model_id)
    throw ConfigError("mono and multi model ids must differ");
  ScorerEndpoint mono = cfg.mono, multi = cfg.multi;
  mono.mask_target = multi.mask_target = cfg.mask_target;
  auto mono_job = std::async(std::launch::async,
                             [&] { return cmd_score(cfg, out.stimuli().string(), mono); });
  auto multi_job = std::async(std::launch::async,
                              [&] { return cmd_score(cfg, out.stimuli().string(), multi); });
  const ScoreOutcome m = mono_job.get();
  const ScoreOutcome u = multi_job.get();
  log << "scored " << mono.model_id << ": cache hits " << m.stats.cache_hits
      << ", endpoint requests " << m.stats.endpoint_calls << "\n";
  log << "scored " << multi.model_id << ": cache hits " << u.stats.cache_hits
      << ", endpoint requests " << u.stats.endpoint_calls << "\n";
  cmd_analyze(cfg, out.stimuli().string(), m.path, u.path);
  const Summary s = cmd_report(cfg, out.extraction().string(), out.stimuli().string(), m.path,
                               u.path, out.bias().string());
  log << s.verdict << "\n";
  return s;
}

}  // namespace structbias
