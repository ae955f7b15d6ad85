#pragma once

// Preference ratios and the bootstrap comparison between a monolingual and a
// multilingual model.
//
// For one model, r = mean(parallel scores) / mean(different scores). The
// comparison statistic is delta = ln r_multi - ln r_mono, so delta > 0 means
// the multilingual model leans further toward the English-parallel corpus.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "structbias/errors.hpp"
#include "structbias/scoring.hpp"
#include "structbias/stimuli.hpp"
#include "structbias/util.hpp"

namespace structbias {

enum class ScoreKind { kProbability, kLogit, kLogProb };

inline std::string_view to_string(ScoreKind k) {
  switch (k) {
    case ScoreKind::kProbability: return "probability";
    case ScoreKind::kLogit: return "logit";
    case ScoreKind::kLogProb: return "log_prob";
  }
  return "probability";
}

inline ScoreKind score_kind_from_string(std::string_view s) {
  if (s == "probability") return ScoreKind::kProbability;
  if (s == "logit") return ScoreKind::kLogit;
  if (s == "log_prob") return ScoreKind::kLogProb;
  throw ConfigError("unknown score kind '" + std::string(s) + "'");
}

inline double score_value(const ScoreRecord& r, ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kProbability: return std::exp(r.log_prob);
    case ScoreKind::kLogit: return r.logit;
    case ScoreKind::kLogProb: return r.log_prob;
  }
  return 0.0;
}

namespace internal {

inline double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// ln r from the two corpus means. For kLogProb the means are mean log
// probabilities, and r is the ratio of geometric-mean probabilities.
inline double log_ratio_from_means(double mean_parallel, double mean_different,
                                   ScoreKind kind) {
  if (kind == ScoreKind::kLogProb) return mean_parallel - mean_different;
  if (!(mean_different > 0.0))
    throw AnalysisError("non-positive mean " + util::format_double(mean_different) +
                        " in different corpus for score kind " +
                        std::string(to_string(kind)));
  if (!(mean_parallel > 0.0))
    throw AnalysisError("non-positive mean " + util::format_double(mean_parallel) +
                        " in parallel corpus for score kind " +
                        std::string(to_string(kind)));
  return std::log(mean_parallel) - std::log(mean_different);
}

inline void check_corpus(std::span<const double> xs, ScoreKind kind, const char* which) {
  if (xs.empty()) throw AnalysisError(std::string("empty corpus: ") + which);
  for (double x : xs) {
    if (!std::isfinite(x)) throw AnalysisError(std::string("non-finite score in ") + which);
    if (kind == ScoreKind::kProbability && !(x > 0.0 && x <= 1.0))
      throw AnalysisError(std::string("probability outside (0, 1] in ") + which);
  }
}

}  // namespace internal

// Mean parallel score divided by mean different score.
inline double corpus_ratio(std::span<const double> parallel, std::span<const double> different,
                           ScoreKind kind = ScoreKind::kProbability) {
  internal::check_corpus(parallel, kind, "parallel");
  internal::check_corpus(different, kind, "different");
  const double mp = internal::mean_of(parallel);
  const double md = internal::mean_of(different);
  if (kind == ScoreKind::kLogProb) return std::exp(mp - md);
  internal::log_ratio_from_means(mp, md, kind);  // sign checks
  return mp / md;
}

// ---------------------------------------------------------------------------

struct PairedScore {
  std::string stimulus_id;
  double mono = 0.0;
  double multi = 0.0;
};

// Both models' scores for every stimulus, split by corpus.
struct PairedCorpusScores {
  std::vector<PairedScore> parallel;
  std::vector<PairedScore> different;
  ScoreKind kind = ScoreKind::kProbability;

  std::vector<double> column(CorpusLabel label, bool multi) const {
    const auto& src = label == CorpusLabel::kParallel ? parallel : different;
    std::vector<double> out;
    out.reserve(src.size());
    for (const PairedScore& p : src) out.push_back(multi ? p.multi : p.mono);
    return out;
  }
};

// Joins records of both models onto the stimuli. Each stimulus needs exactly
// one record per model and no record may name an unknown stimulus.
inline PairedCorpusScores pair_scores(const std::vector<Stimulus>& stimuli,
                                      const std::vector<ScoreRecord>& mono,
                                      const std::vector<ScoreRecord>& multi, ScoreKind kind) {
  auto index = [&](const std::vector<ScoreRecord>& recs, const char* which) {
    std::unordered_map<std::string, const ScoreRecord*> m;
    for (const ScoreRecord& r : recs)
      if (!m.emplace(r.stimulus_id, &r).second)
        throw ConsistencyError(std::string(which) + " scores: duplicate id " + r.stimulus_id);
    return m;
  };
  const auto mono_ix = index(mono, "mono");
  const auto multi_ix = index(multi, "multi");
  std::unordered_map<std::string, bool> known;
  for (const Stimulus& st : stimuli) known.emplace(st.stimulus_id, true);
  for (const auto* ix : {&mono_ix, &multi_ix})
    for (const auto& [id, _] : *ix)
      if (!known.count(id)) throw ConsistencyError("score for unknown stimulus " + id);

  PairedCorpusScores out;
  out.kind = kind;
  for (const Stimulus& st : stimuli) {
    auto a = mono_ix.find(st.stimulus_id);
    auto b = multi_ix.find(st.stimulus_id);
    if (a == mono_ix.end())
      throw ConsistencyError("mono scores: missing id " + st.stimulus_id);
    if (b == multi_ix.end())
      throw ConsistencyError("multi scores: missing id " + st.stimulus_id);
    PairedScore p{st.stimulus_id, score_value(*a->second, kind), score_value(*b->second, kind)};
    (st.corpus_label == CorpusLabel::kParallel ? out.parallel : out.different).push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct BiasResult {
  double r_mono = 0.0;
  double r_multi = 0.0;
  double delta = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  std::size_t n_parallel = 0;
  std::size_t n_different = 0;
  std::size_t n_resamples = 0;
  std::uint64_t seed = 0;
  ScoreKind score_kind = ScoreKind::kProbability;

  // Filled by callers that persist the result.
  std::string scheme_id;
  std::string mono_model_id;
  std::string multi_model_id;
};

inline constexpr std::size_t kDefaultResamples = 10000;
inline constexpr std::size_t kMinResamples = 100;

// Linear interpolation between order statistics; `sorted` is ascending.
inline double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw AnalysisError("percentile of empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace internal {

// Stream ids that keep the resampling draws of different statistics apart.
inline constexpr std::uint64_t kDeltaStream = 0x5eed0000ULL;
inline constexpr std::uint64_t kMeanStream = 0x3ea40000ULL;

}  // namespace internal

// Percentile bootstrap over sentences. Both corpora are resampled with
// replacement, independently, and the same index multiset serves both models.
// One-sided p-value for r_multi > r_mono with the add-one estimator.
inline BiasResult bootstrap_compare(const PairedCorpusScores& scores,
                                    std::size_t n_resamples = kDefaultResamples,
                                    std::uint64_t seed = 0) {
  if (n_resamples < kMinResamples)
    throw AnalysisError("n_resamples must be >= " + std::to_string(kMinResamples));
  const ScoreKind kind = scores.kind;
  const auto pm = scores.column(CorpusLabel::kParallel, false);
  const auto dm = scores.column(CorpusLabel::kDifferent, false);
  const auto pu = scores.column(CorpusLabel::kParallel, true);
  const auto du = scores.column(CorpusLabel::kDifferent, true);
  internal::check_corpus(pm, kind, "parallel (mono)");
  internal::check_corpus(dm, kind, "different (mono)");
  internal::check_corpus(pu, kind, "parallel (multi)");
  internal::check_corpus(du, kind, "different (multi)");

  BiasResult res;
  res.score_kind = kind;
  res.n_parallel = pm.size();
  res.n_different = dm.size();
  res.n_resamples = n_resamples;
  res.seed = seed;
  const double lr_mono = internal::log_ratio_from_means(internal::mean_of(pm),
                                                        internal::mean_of(dm), kind);
  const double lr_multi = internal::log_ratio_from_means(internal::mean_of(pu),
                                                         internal::mean_of(du), kind);
  res.r_mono = std::exp(lr_mono);
  res.r_multi = std::exp(lr_multi);
  res.delta = lr_multi - lr_mono;

  const std::size_t np = pm.size();
  const std::size_t nd = dm.size();
  std::vector<double> deltas(n_resamples);
  std::size_t non_positive = 0;
  for (std::size_t b = 0; b < n_resamples; ++b) {
    util::CounterRng rng(seed, internal::kDeltaStream + b);
    double sp_mono = 0, sp_multi = 0, sd_mono = 0, sd_multi = 0;
    for (std::size_t i = 0; i < np; ++i) {
      const std::size_t k = rng.below(np);
      sp_mono += pm[k];
      sp_multi += pu[k];
    }
    for (std::size_t i = 0; i < nd; ++i) {
      const std::size_t k = rng.below(nd);
      sd_mono += dm[k];
      sd_multi += du[k];
    }
    const double fp = static_cast<double>(np), fd = static_cast<double>(nd);
    const double d = internal::log_ratio_from_means(sp_multi / fp, sd_multi / fd, kind) -
                     internal::log_ratio_from_means(sp_mono / fp, sd_mono / fd, kind);
    if (!std::isfinite(d))
      throw AnalysisError("non-finite delta in resample " + std::to_string(b));
    deltas[b] = d;
    if (d <= 0.0) ++non_positive;
  }
  std::sort(deltas.begin(), deltas.end());
  res.ci_low = percentile(deltas, 0.025);
  res.ci_high = percentile(deltas, 0.975);
  res.p_value = static_cast<double>(1 + non_positive) / static_cast<double>(n_resamples + 1);
  return res;
}

struct MeanCell {
  std::string model;  // "mono" or "multi"
  CorpusLabel corpus = CorpusLabel::kParallel;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

// Mean score with a 95% percentile-bootstrap interval for each of
// {mono, multi} x {parallel, different}, in that order.
inline std::vector<MeanCell> summarize_means(const PairedCorpusScores& scores,
                                             std::size_t n_resamples = kDefaultResamples,
                                             std::uint64_t seed = 0) {
  if (n_resamples < kMinResamples)
    throw AnalysisError("n_resamples must be >= " + std::to_string(kMinResamples));
  std::vector<MeanCell> cells;
  std::uint64_t cell_no = 0;
  for (const bool multi : {false, true}) {
    for (const CorpusLabel label : {CorpusLabel::kParallel, CorpusLabel::kDifferent}) {
      const auto xs = scores.column(label, multi);
      if (xs.empty())
        throw AnalysisError("empty corpus: " + std::string(to_string(label)));
      MeanCell c;
      c.model = multi ? "multi" : "mono";
      c.corpus = label;
      c.n = xs.size();
      c.mean = internal::mean_of(xs);
      std::vector<double> means(n_resamples);
      for (std::size_t b = 0; b < n_resamples; ++b) {
        util::CounterRng rng(seed, internal::kMeanStream + (cell_no << 32) + b);
        double s = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) s += xs[rng.below(xs.size())];
        means[b] = s / static_cast<double>(xs.size());
      }
      std::sort(means.begin(), means.end());
      c.ci_low = percentile(means, 0.025);
      c.ci_high = percentile(means, 0.975);
      cells.push_back(c);
      ++cell_no;
    }
  }
  return cells;
}

// ---------------------------------------------------------------------------

inline nlohmann::json bias_to_json(const BiasResult& r) {
  nlohmann::json j;
  j["r_mono"] = r.r_mono;
  j["r_multi"] = r.r_multi;
  j["delta"] = r.delta;
  j["ci_low"] = r.ci_low;
  j["ci_high"] = r.ci_high;
  j["p_value"] = r.p_value;
  j["n_parallel"] = r.n_parallel;
  j["n_different"] = r.n_different;
  j["n_resamples"] = r.n_resamples;
  j["seed"] = r.seed;
  j["score_kind"] = to_string(r.score_kind);
  j["scheme_id"] = r.scheme_id;
  j["mono_model_id"] = r.mono_model_id;
  j["multi_model_id"] = r.multi_model_id;
  return j;
}

inline BiasResult bias_from_json(const nlohmann::json& j) {
  BiasResult r;
  try {
    r.r_mono = j.at("r_mono").get<double>();
    r.r_multi = j.at("r_multi").get<double>();
    r.delta = j.at("delta").get<double>();
    r.ci_low = j.at("ci_low").get<double>();
    r.ci_high = j.at("ci_high").get<double>();
    r.p_value = j.at("p_value").get<double>();
    r.n_parallel = j.at("n_parallel").get<std::size_t>();
    r.n_different = j.at("n_different").get<std::size_t>();
    r.n_resamples = j.at("n_resamples").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.score_kind = score_kind_from_string(j.at("score_kind").get<std::string>());
    r.scheme_id = j.value("scheme_id", "");
    r.mono_model_id = j.value("mono_model_id", "");
    r.multi_model_id = j.value("multi_model_id", "");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad bias result: ") + e.what());
  }
  return r;
}

}  // namespace structbias
