// structbias: extract construction corpora from CoNLL-U treebanks, score
// their target words with external masked-LM scorers, and compare a
// monolingual with a multilingual model.
//
// Exit codes: 0 success, 1 analysis/validation failure, 2 usage/io failure.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "structbias/structbias.hpp"

namespace {

using namespace structbias;

constexpr int kExitOk = 0;
constexpr int kExitAnalysis = 1;
constexpr int kExitUsage = 2;

struct EndpointFlags {
  std::string cmd;
  std::string url;
  std::string file;
  std::string model_id;
  std::string revision;

  ScorerEndpoint resolve(const std::string& role, std::size_t batch_size, bool mask) const {
    const int given = !cmd.empty() + !url.empty() + !file.empty();
    if (given != 1)
      throw ConfigError("give exactly one scorer (--" + role + "scorer-cmd, --" + role +
                        "scorer-url or --" + role + "scorer-file)");
    if (model_id.empty()) throw ConfigError("--" + role + "model-id is required");
    ScorerEndpoint ep;
    ep.kind = !cmd.empty() ? EndpointKind::kSubprocess
              : !url.empty() ? EndpointKind::kHttp
                             : EndpointKind::kFile;
    ep.address = !cmd.empty() ? cmd : !url.empty() ? url : file;
    ep.model_id = model_id;
    ep.model_revision = revision;
    ep.batch_size = batch_size;
    ep.mask_target = mask;
    return ep;
  }
};

void add_endpoint_flags(CLI::App* app, EndpointFlags& f, const std::string& role) {
  app->add_option("--" + role + "scorer-cmd", f.cmd,
                  "shell command speaking the JSONL scorer protocol on stdin/stdout");
  app->add_option("--" + role + "scorer-url", f.url, "base URL of an HTTP scorer (POST /score)");
  app->add_option("--" + role + "scorer-file", f.file, "precomputed response JSONL");
  app->add_option("--" + role + "model-id", f.model_id, "model identifier recorded in scores");
  app->add_option("--" + role + "model-revision", f.revision, "model revision recorded in scores");
}

std::vector<ReportFormat> parse_formats(const std::string& s) {
  if (s == "all") return {ReportFormat::kJson, ReportFormat::kCsv, ReportFormat::kMarkdown};
  std::vector<ReportFormat> out;
  for (std::string_view part : util::split(s, ',')) out.push_back(report_format_from_string(part));
  return out;
}

// Reads protocol requests on stdin and answers with the deterministic
// reference scorer.
int serve_reference(const std::string& model_id, const ReferenceScorerOptions& opts) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(std::cin, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    nlohmann::ordered_json resp;
    try {
      const Stimulus st = stimulus_from_json(nlohmann::json::parse(line));
      const ScoreRecord r = reference_score(st, model_id, opts);
      resp["stimulus_id"] = r.stimulus_id;
      resp["logit"] = r.logit;
      resp["log_prob"] = r.log_prob;
      resp["n_subtokens"] = r.n_subtokens;
    } catch (const std::exception& e) {
      resp["error"] = e.what();
      resp["line"] = line_no;
    }
    std::cout << resp.dump() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure English structural bias in multilingual masked language models"};
  app.set_config("--config", "", "TOML/INI file setting any flag; command line overrides");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  RunConfig cfg;
  std::string score_kind_name = "probability";
  std::string formats = "all";
  std::string mask_target = "true";
  std::size_t batch_size = 64;
  EndpointFlags single, mono, multi;
  mono.model_id = "mono";
  multi.model_id = "multi";
  std::string stimuli_path, mono_scores, multi_scores, bias_path, extraction_path, output_file;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.output_dir, "output directory")->capture_default_str();
  };
  auto add_extract_flags = [&](CLI::App* sub) {
    sub->add_option("--treebank", cfg.treebanks, "CoNLL-U file(s)")->required();
    sub->add_option("--scheme", cfg.scheme,
                    "spanish-prodrop, greek-subject-verb, or a JSON scheme file")
        ->required();
    sub->add_flag("--personal-pronouns-only", cfg.personal_pronouns_only,
                  "pronoun subjects must carry PronType=Prs");
  };
  auto add_scoring_flags = [&](CLI::App* sub) {
    sub->add_option("--mask-target", mask_target, "mask the target pieces (true/false)")
        ->check(CLI::IsMember({"true", "false"}))
        ->capture_default_str();
    sub->add_option("--batch-size", batch_size, "stimuli per scorer request")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--cache-dir", cfg.cache_dir, "score cache directory")
        ->envname("STRUCTBIAS_CACHE");
  };
  auto add_analysis_flags = [&](CLI::App* sub) {
    sub->add_option("--score-kind", score_kind_name, "probability, logit or log_prob")
        ->check(CLI::IsMember({"probability", "logit", "log_prob"}))
        ->capture_default_str();
    sub->add_option("--resamples", cfg.n_resamples, "bootstrap resamples")
        ->check(CLI::Range(static_cast<std::size_t>(kMinResamples), static_cast<std::size_t>(100000000)))
        ->capture_default_str();
    sub->add_option("--seed", cfg.seed, "bootstrap seed")->capture_default_str();
  };
  auto add_format_flag = [&](CLI::App* sub) {
    sub->add_option("--format", formats, "json, csv, markdown, comma list, or all")
        ->capture_default_str();
  };

  CLI::App* extract = app.add_subcommand("extract", "build stimulus corpora from a treebank");
  add_extract_flags(extract);
  add_common(extract);

  CLI::App* score = app.add_subcommand("score", "score stimuli with one model");
  score->add_option("--stimuli", stimuli_path, "stimulus JSONL (default <out>/stimuli.jsonl)");
  score->add_option("--scorer-cmd", single.cmd, "scorer command (stdin/stdout protocol)");
  score->add_option("--scorer-url", single.url, "HTTP scorer base URL");
  score->add_option("--scorer-file", single.file, "precomputed responses");
  score->add_option("--model-id", single.model_id, "model identifier")->required();
  score->add_option("--model-revision", single.revision, "model revision recorded in the header");
  score->add_option("--output", output_file, "score file (default <out>/scores.<model>.jsonl)");
  add_scoring_flags(score);
  add_common(score);

  CLI::App* analyze = app.add_subcommand("analyze", "bootstrap comparison of two score files");
  analyze->add_option("--stimuli", stimuli_path, "stimulus JSONL");
  analyze->add_option("--mono-scores", mono_scores, "monolingual score file")->required();
  analyze->add_option("--multi-scores", multi_scores, "multilingual score file")->required();
  add_analysis_flags(analyze);
  add_common(analyze);

  CLI::App* report = app.add_subcommand("report", "summary tables from analysis outputs");
  report->add_option("--stimuli", stimuli_path, "stimulus JSONL");
  report->add_option("--extraction", extraction_path, "extraction.json");
  report->add_option("--mono-scores", mono_scores, "monolingual score file")->required();
  report->add_option("--multi-scores", multi_scores, "multilingual score file")->required();
  report->add_option("--bias", bias_path, "bias.json (default <out>/bias.json)");
  add_format_flag(report);
  add_common(report);

  CLI::App* run = app.add_subcommand("run", "extract, score both models, analyze, report");
  add_extract_flags(run);
  add_endpoint_flags(run, mono, "mono-");
  add_endpoint_flags(run, multi, "multi-");
  add_scoring_flags(run);
  add_analysis_flags(run);
  add_format_flag(run);
  add_common(run);

  std::string ref_model;
  ReferenceScorerOptions ref_opts;
  CLI::App* ref = app.add_subcommand(
      "reference-scorer", "deterministic stand-in scorer speaking the stdin/stdout protocol");
  ref->add_option("--model-id", ref_model, "model id the scores are derived from")->required();
  ref->add_option("--seed", ref_opts.seed, "score seed")->capture_default_str();
  ref->add_option("--beta", ref_opts.beta, "planted log-probability bias on parallel stimuli")
      ->capture_default_str();
  ref->add_option("--biased-model", ref_opts.biased_model_id, "model id the bias applies to")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    cfg.score_kind = score_kind_from_string(score_kind_name);
    cfg.mask_target = mask_target == "true";
    cfg.formats = parse_formats(formats);
    const OutputPaths out{cfg.output_dir};
    if (stimuli_path.empty()) stimuli_path = out.stimuli().string();

    if (*extract) {
      cmd_extract(cfg, std::cout);
    } else if (*score) {
      const ScorerEndpoint ep = single.resolve("", batch_size, cfg.mask_target);
      const ScoreOutcome o = cmd_score(cfg, stimuli_path, ep, output_file);
      std::cerr << "cache hits: " << o.stats.cache_hits
                << ", endpoint requests: " << o.stats.endpoint_calls
                << ", stimuli sent: " << o.stats.stimuli_requested << "\n";
      std::cout << "wrote " << o.path << "\n";
    } else if (*analyze) {
      const nlohmann::json j = cmd_analyze(cfg, stimuli_path, mono_scores, multi_scores);
      std::cout << canonical_dump(j);
    } else if (*report) {
      if (extraction_path.empty()) extraction_path = out.extraction().string();
      if (bias_path.empty()) bias_path = out.bias().string();
      const Summary s = cmd_report(cfg, extraction_path, stimuli_path, mono_scores,
                                   multi_scores, bias_path);
      std::cout << emit(s, ReportFormat::kMarkdown);
    } else if (*run) {
      cfg.mono = mono.resolve("mono-", batch_size, cfg.mask_target);
      cfg.multi = multi.resolve("multi-", batch_size, cfg.mask_target);
      const Summary s = cmd_run(cfg, std::cerr);
      std::cout << emit(s, ReportFormat::kMarkdown);
    } else if (*ref) {
      return serve_reference(ref_model, ref_opts);
    }
  } catch (const Error& e) {
    std::cerr << "structbias: " << e.what() << "\n";
    switch (e.kind()) {
      case Error::Kind::kIo:
      case Error::Kind::kConfig:
        return kExitUsage;
      default:
        return kExitAnalysis;
    }
  } catch (const std::exception& e) {
    std::cerr << "structbias: " << e.what() << "\n";
    return kExitAnalysis;
  }
  return kExitOk;
}
