#pragma once

// Target-word scores from external scorers.
//
// Scorers speak a line protocol: stimulus objects in (plus "mask_target"),
// {"stimulus_id", "logit", "log_prob", "n_subtokens"} objects out, in any
// order. A scorer may be a subprocess (stdin/stdout), an HTTP service
// (POST /score with JSON arrays), or a file of precomputed responses.

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "structbias/errors.hpp"
#include "structbias/stimuli.hpp"
#include "structbias/util.hpp"

namespace structbias {

struct ScoreRecord {
  std::string stimulus_id;
  std::string model_id;
  double logit = 0.0;
  double log_prob = 0.0;
  int n_subtokens = 1;
  bool truncated = false;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

enum class EndpointKind { kSubprocess, kHttp, kFile };

struct ScorerEndpoint {
  EndpointKind kind = EndpointKind::kSubprocess;
  std::string address;
  std::string model_id;
  std::size_t batch_size = 64;
  bool mask_target = true;
  std::string model_revision;  // recorded in score file headers
};

// Response as received, before it is bound to a model id.
struct ScoreResponse {
  std::string stimulus_id;
  double logit = 0.0;
  double log_prob = 0.0;
  int n_subtokens = 1;
  bool truncated = false;
};

inline nlohmann::ordered_json request_json(const Stimulus& st, bool mask_target) {
  nlohmann::ordered_json j = stimulus_to_json(st);
  j["mask_target"] = mask_target;
  return j;
}

namespace internal {

inline bool looks_non_finite(std::string_view line) {
  return line.find("NaN") != std::string_view::npos ||
         line.find("Infinity") != std::string_view::npos;
}

inline ScoreResponse response_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ProtocolError("score response is not an object");
  if (j.contains("error"))
    throw ProtocolError("scorer reported error: " + j["error"].dump());
  ScoreResponse r;
  try {
    r.stimulus_id = j.at("stimulus_id").get<std::string>();
    for (const char* key : {"logit", "log_prob"})
      if (!j.at(key).is_number())
        throw DataError("stimulus " + r.stimulus_id + ": " + key + " is not a finite number");
    r.logit = j.at("logit").get<double>();
    r.log_prob = j.at("log_prob").get<double>();
    r.n_subtokens = j.at("n_subtokens").get<int>();
    r.truncated = j.value("truncated", false);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed score response: ") + e.what());
  }
  if (!std::isfinite(r.logit) || !std::isfinite(r.log_prob))
    throw DataError("stimulus " + r.stimulus_id + ": non-finite score");
  if (r.log_prob > 0.0)
    throw DataError("stimulus " + r.stimulus_id + ": log_prob " +
                    util::format_double(r.log_prob) + " > 0");
  if (r.n_subtokens < 1)
    throw DataError("stimulus " + r.stimulus_id + ": n_subtokens < 1");
  return r;
}

inline std::vector<ScoreResponse> parse_response_lines(std::string_view data) {
  std::vector<ScoreResponse> out;
  std::size_t line_no = 0;
  for (std::string_view line : util::split(data, '\n')) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      if (looks_non_finite(line))
        throw DataError("response line " + std::to_string(line_no) + ": non-finite score");
      throw ProtocolError("response line " + std::to_string(line_no) +
                          ": malformed JSON: " + e.what());
    }
    out.push_back(response_from_json(j));
  }
  return out;
}

inline std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const std::string& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

inline std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace internal

// A scorer answers one batch at a time.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<ScoreResponse> score_batch(const std::vector<const Stimulus*>& batch,
                                                 bool mask_target) = 0;
};

// Runs `command` through /bin/sh once per batch with the request JSONL on
// standard input.
class SubprocessScorer : public Scorer {
 public:
  explicit SubprocessScorer(std::string command) : command_(std::move(command)) {}

  std::vector<ScoreResponse> score_batch(const std::vector<const Stimulus*>& batch,
                                         bool mask_target) override {
    std::string request;
    for (const Stimulus* st : batch) request += request_json(*st, mask_target).dump() + '\n';

    std::string tmpl = (std::filesystem::temp_directory_path() / "structbias-req-XXXXXX").string();
    const int fd = ::mkstemp(tmpl.data());
    if (fd < 0) throw IoError("cannot create temporary request file");
    ::close(fd);
    struct Remove {
      std::string path;
      ~Remove() { std::remove(path.c_str()); }
    } cleanup{tmpl};
    util::write_file(tmpl, request);

    // Subshell, so a pipeline's first stage gets the requests.
    const std::string cmd = "(" + command_ + ") < " + internal::shell_quote(tmpl);
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw TransportError("cannot start scorer: " + command_);
    std::string output;
    char buf[8192];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, n);
    const int status = ::pclose(pipe);
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
      throw TransportError("scorer exited abnormally (status " + std::to_string(status) +
                           "): " + command_);
    return internal::parse_response_lines(output);
  }

 private:
  std::string command_;
};

// POSTs a JSON array of requests to <url>/score.
class HttpScorer : public Scorer {
 public:
  explicit HttpScorer(const std::string& url) {
    const std::size_t scheme = url.find("://");
    const std::size_t path_at = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    origin_ = path_at == std::string::npos ? url : url.substr(0, path_at);
    base_path_ = path_at == std::string::npos ? "" : url.substr(path_at);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }

  std::vector<ScoreResponse> score_batch(const std::vector<const Stimulus*>& batch,
                                         bool mask_target) override {
    nlohmann::ordered_json body = nlohmann::ordered_json::array();
    for (const Stimulus* st : batch) body.push_back(request_json(*st, mask_target));
    httplib::Client client(origin_);
    client.set_read_timeout(600, 0);
    auto res = client.Post(base_path_ + "/score", body.dump(), "application/json");
    if (!res)
      throw TransportError("scorer unreachable at " + origin_ + ": " +
                           httplib::to_string(res.error()));
    if (res->status != 200)
      throw TransportError("scorer at " + origin_ + " returned HTTP " +
                           std::to_string(res->status));
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      if (internal::looks_non_finite(res->body)) throw DataError("non-finite score in response");
      throw ProtocolError(std::string("malformed HTTP response: ") + e.what());
    }
    if (!j.is_array()) throw ProtocolError("HTTP response is not a JSON array");
    std::vector<ScoreResponse> out;
    for (const auto& item : j) out.push_back(internal::response_from_json(item));
    return out;
  }

 private:
  std::string origin_;
  std::string base_path_;
};

// Precomputed responses; each batch receives the responses for its ids.
class FileScorer : public Scorer {
 public:
  explicit FileScorer(const std::string& path)
      : responses_(internal::parse_response_lines(util::read_file(path))) {}

  std::vector<ScoreResponse> score_batch(const std::vector<const Stimulus*>& batch,
                                         bool) override {
    std::set<std::string> wanted;
    for (const Stimulus* st : batch) wanted.insert(st->stimulus_id);
    std::vector<ScoreResponse> out;
    for (const ScoreResponse& r : responses_)
      if (wanted.count(r.stimulus_id)) out.push_back(r);
    return out;
  }

 private:
  std::vector<ScoreResponse> responses_;
};

inline std::unique_ptr<Scorer> make_scorer(const ScorerEndpoint& ep) {
  switch (ep.kind) {
    case EndpointKind::kSubprocess: return std::make_unique<SubprocessScorer>(ep.address);
    case EndpointKind::kHttp: return std::make_unique<HttpScorer>(ep.address);
    case EndpointKind::kFile: return std::make_unique<FileScorer>(ep.address);
  }
  throw ConfigError("unknown endpoint kind");
}

// ---------------------------------------------------------------------------
// Reference scorer. Scores are a pure function of (model_id, seed,
// stimulus_id, target_form) through SHA-256, so they agree across processes
// and platforms.

struct ReferenceScorerOptions {
  std::uint64_t seed = 0;
  // Parallel-corpus probabilities of `biased_model_id` are multiplied by
  // exp(beta). |beta| must stay below 11.
  double beta = 0.0;
  std::string biased_model_id = "multi";
};

inline constexpr double kReferenceLogProbMin = -12.0;
inline constexpr double kReferenceLogProbMax = -0.05;

inline ScoreRecord reference_score(const Stimulus& st, const std::string& model_id,
                                   const ReferenceScorerOptions& opts = {}) {
  const std::string key = model_id + '\x1f' + std::to_string(opts.seed) + '\x1f' +
                          st.stimulus_id + '\x1f' + st.target_form;
  util::CounterRng rng(util::sha256_u64(key));
  // Sum of twelve uniforms minus six: mean 0, sd 1, support [-6, 6].
  double z = -6.0;
  for (int i = 0; i < 12; ++i) z += rng.unit();

  const double beta = model_id == opts.biased_model_id ? opts.beta : 0.0;
  if (std::fabs(beta) >= 11.0) throw ConfigError("reference scorer: |beta| must be < 11");
  const double mid = 0.5 * (kReferenceLogProbMin + kReferenceLogProbMax);
  const double half = std::min(5.0, 0.5 * (kReferenceLogProbMax - kReferenceLogProbMin - std::fabs(beta)));
  double log_prob = mid - 0.5 * beta + (half / 6.0) * z;
  if (st.corpus_label == CorpusLabel::kParallel) log_prob += beta;

  ScoreRecord r;
  r.stimulus_id = st.stimulus_id;
  r.model_id = model_id;
  r.log_prob = log_prob;
  r.logit = 1.5 * log_prob + 20.0;
  r.n_subtokens = 1;
  return r;
}

class ReferenceScorer : public Scorer {
 public:
  ReferenceScorer(std::string model_id, ReferenceScorerOptions opts)
      : model_id_(std::move(model_id)), opts_(std::move(opts)) {}

  std::vector<ScoreResponse> score_batch(const std::vector<const Stimulus*>& batch,
                                         bool) override {
    std::vector<ScoreResponse> out;
    for (const Stimulus* st : batch) {
      const ScoreRecord r = reference_score(*st, model_id_, opts_);
      out.push_back({r.stimulus_id, r.logit, r.log_prob, r.n_subtokens, false});
    }
    return out;
  }

 private:
  std::string model_id_;
  ReferenceScorerOptions opts_;
};

// Stand-in corpus for simulations: distinct ids and targets, valid spans.
inline std::vector<Stimulus> synthetic_stimuli(std::size_t n_parallel, std::size_t n_different,
                                               std::string_view tag = "synthetic") {
  std::vector<Stimulus> out;
  out.reserve(n_parallel + n_different);
  auto add = [&](CorpusLabel label, std::size_t i) {
    Stimulus st;
    const std::string word = "w" + std::to_string(i);
    st.stimulus_id = std::string(tag) + ":" + std::string(to_string(label)) + "-" + std::to_string(i);
    st.corpus_label = label;
    st.scheme_id = "synthetic";
    st.text = "frase " + word + " final";
    st.target_char_start = 6;
    st.target_char_end = 6 + word.size();
    st.target_form = word;
    st.target_token_id = 2;
    out.push_back(std::move(st));
  };
  for (std::size_t i = 0; i < n_parallel; ++i) add(CorpusLabel::kParallel, i);
  for (std::size_t i = 0; i < n_different; ++i) add(CorpusLabel::kDifferent, i);
  return out;
}

// ---------------------------------------------------------------------------
// Persistent cache: one JSONL file per model id under the cache directory.
// Keys hash the model id, masking mode, and the full stimulus content, so
// re-extracted text never hits a stale entry. Single writer.

class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create cache directory " + dir_.string());
  }

  static std::string key_for(const Stimulus& st, const std::string& model_id,
                             bool mask_target) {
    return util::sha256_hex(model_id + '\x1f' + (mask_target ? "mask" : "nomask") + '\x1f' +
                            stimulus_to_json(st).dump());
  }

  std::optional<ScoreResponse> get(const std::string& model_id, const std::string& key) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto& m = load(model_id);
    auto it = m.find(key);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& model_id, const std::string& key, const ScoreResponse& r) {
    std::lock_guard<std::mutex> lock(mu_);
    auto& m = load(model_id);
    if (!m.emplace(key, r).second) return;
    nlohmann::ordered_json j;
    j["key"] = key;
    j["stimulus_id"] = r.stimulus_id;
    j["logit"] = r.logit;
    j["log_prob"] = r.log_prob;
    j["n_subtokens"] = r.n_subtokens;
    if (r.truncated) j["truncated"] = true;
    std::ofstream out(file_for(model_id), std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to cache " + file_for(model_id).string());
    out << j.dump() << '\n';
  }

  std::filesystem::path file_for(const std::string& model_id) const {
    std::string safe;
    for (char c : model_id)
      safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
    return dir_ / (safe + "-" + util::sha256_hex(model_id).substr(0, 8) + ".jsonl");
  }

 private:
  std::unordered_map<std::string, ScoreResponse>& load(const std::string& model_id) {
    auto it = entries_.find(model_id);
    if (it != entries_.end()) return it->second;
    auto& m = entries_[model_id];
    std::ifstream in(file_for(model_id), std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (util::trim(line).empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        ScoreResponse r = internal::response_from_json(j);
        m.emplace(j.at("key").get<std::string>(), std::move(r));
      } catch (const std::exception&) {
        // Torn trailing line from an interrupted writer; the entry is rescored.
      }
    }
    return m;
  }

  std::filesystem::path dir_;
  std::mutex mu_;
  std::unordered_map<std::string, std::unordered_map<std::string, ScoreResponse>> entries_;
};

struct ScoreRunStats {
  std::size_t cache_hits = 0;
  std::size_t endpoint_calls = 0;    // batches sent
  std::size_t stimuli_requested = 0; // stimuli sent across all batches
};

// One record per stimulus, in input order. Cache hits skip the scorer; misses
// are written back. Every batch must answer each of its ids exactly once.
inline std::vector<ScoreRecord> score_all(const std::vector<Stimulus>& stimuli, Scorer& scorer,
                                          const std::string& model_id, std::size_t batch_size,
                                          bool mask_target, ScoreCache* cache = nullptr,
                                          ScoreRunStats* stats = nullptr) {
  if (stimuli.empty()) throw ContractError("score_all: no stimuli");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  for (const Stimulus& st : stimuli)
    if (const std::string d = span_defect(st); !d.empty())
      throw ValidationError("stimulus " + st.stimulus_id + ": " + d);

  ScoreRunStats local;
  std::vector<std::optional<ScoreResponse>> slots(stimuli.size());
  std::vector<std::string> keys(stimuli.size());
  std::vector<std::size_t> misses;
  for (std::size_t i = 0; i < stimuli.size(); ++i) {
    if (cache) {
      keys[i] = ScoreCache::key_for(stimuli[i], model_id, mask_target);
      slots[i] = cache->get(model_id, keys[i]);
    }
    if (slots[i]) {
      ++local.cache_hits;
    } else {
      misses.push_back(i);
    }
  }

  for (std::size_t b = 0; b < misses.size(); b += batch_size) {
    const std::size_t e = std::min(misses.size(), b + batch_size);
    std::vector<const Stimulus*> batch;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t k = b; k < e; ++k) {
      batch.push_back(&stimuli[misses[k]]);
      index.emplace(stimuli[misses[k]].stimulus_id, misses[k]);
    }
    ++local.endpoint_calls;
    local.stimuli_requested += batch.size();
    std::vector<ScoreResponse> responses = scorer.score_batch(batch, mask_target);

    std::vector<std::string> unknown, duplicate, missing;
    std::set<std::string> answered;
    for (ScoreResponse& r : responses) {
      auto it = index.find(r.stimulus_id);
      if (it == index.end()) {
        unknown.push_back(r.stimulus_id);
        continue;
      }
      if (!answered.insert(r.stimulus_id).second) {
        duplicate.push_back(r.stimulus_id);
        continue;
      }
      slots[it->second] = std::move(r);
    }
    for (const Stimulus* st : batch)
      if (!answered.count(st->stimulus_id)) missing.push_back(st->stimulus_id);
    if (!unknown.empty() || !duplicate.empty() || !missing.empty()) {
      std::string msg = "scorer protocol violation:";
      if (!missing.empty()) msg += " missing ids [" + internal::join_ids(missing) + "]";
      if (!duplicate.empty()) msg += " duplicate ids [" + internal::join_ids(duplicate) + "]";
      if (!unknown.empty()) msg += " unknown ids [" + internal::join_ids(unknown) + "]";
      throw ProtocolError(msg);
    }
    if (cache)
      for (std::size_t k = b; k < e; ++k)
        cache->put(model_id, keys[misses[k]], *slots[misses[k]]);
  }

  std::vector<ScoreRecord> out;
  out.reserve(stimuli.size());
  for (std::size_t i = 0; i < stimuli.size(); ++i) {
    const ScoreResponse& r = *slots[i];
    out.push_back({stimuli[i].stimulus_id, model_id, r.logit, r.log_prob, r.n_subtokens,
                   r.truncated});
  }
  if (stats) *stats = local;
  return out;
}

inline std::vector<ScoreRecord> score_all(const std::vector<Stimulus>& stimuli,
                                          const ScorerEndpoint& endpoint,
                                          ScoreCache* cache = nullptr,
                                          ScoreRunStats* stats = nullptr) {
  auto scorer = make_scorer(endpoint);
  return score_all(stimuli, *scorer, endpoint.model_id, endpoint.batch_size,
                   endpoint.mask_target, cache, stats);
}

// ---------------------------------------------------------------------------

struct ScoreValidation {
  struct Coverage {
    std::size_t expected = 0;
    std::size_t covered = 0;
  };
  std::vector<std::string> defects;
  // model_id -> corpus_label -> coverage
  std::map<std::string, std::map<std::string, Coverage>> coverage;

  bool ok() const { return defects.empty(); }
};

// Checks, per model id, that records and stimuli are in bijection.
inline ScoreValidation validate_scores(const std::vector<Stimulus>& stimuli,
                                       const std::vector<ScoreRecord>& records) {
  ScoreValidation v;
  std::unordered_map<std::string, const Stimulus*> by_id;
  for (const Stimulus& st : stimuli) by_id.emplace(st.stimulus_id, &st);

  std::map<std::string, std::map<std::string, int>> seen;  // model -> id -> count
  for (const ScoreRecord& r : records) seen[r.model_id][r.stimulus_id]++;

  for (const auto& [model, counts] : seen) {
    auto& cov = v.coverage[model];
    for (const Stimulus& st : stimuli) {
      auto& c = cov[std::string(to_string(st.corpus_label))];
      ++c.expected;
      auto it = counts.find(st.stimulus_id);
      if (it == counts.end()) {
        v.defects.push_back(model + ": missing record for " + st.stimulus_id);
      } else {
        ++c.covered;
      }
    }
    for (const auto& [id, n] : counts) {
      if (!by_id.count(id)) v.defects.push_back(model + ": record for unknown id " + id);
      if (n > 1) v.defects.push_back(model + ": duplicate record for " + id);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Score files: a header object line, then one record per line.

struct ScoreFileHeader {
  std::string model_id;
  std::string scheme_id;
  std::string created;
  bool mask_target = true;
  std::string config_hash;
  std::string stimuli_sha256;
  std::string model_revision;
};

// UTC timestamp, honouring SOURCE_DATE_EPOCH for reproducible output.
inline std::string iso8601_now() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    long long v = 0;
    if (util::parse_int(std::string_view(sde), &v)) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string score_file_contents(const ScoreFileHeader& h,
                                       const std::vector<ScoreRecord>& records) {
  nlohmann::ordered_json head;
  head["model_id"] = h.model_id;
  head["scheme_id"] = h.scheme_id;
  head["created"] = h.created;
  head["mask_target"] = h.mask_target;
  if (!h.config_hash.empty()) head["config_hash"] = h.config_hash;
  if (!h.stimuli_sha256.empty()) head["stimuli_sha256"] = h.stimuli_sha256;
  if (!h.model_revision.empty()) head["model_revision"] = h.model_revision;
  std::string out = head.dump() + '\n';
  for (const ScoreRecord& r : records) {
    nlohmann::ordered_json j;
    j["stimulus_id"] = r.stimulus_id;
    j["logit"] = r.logit;
    j["log_prob"] = r.log_prob;
    j["n_subtokens"] = r.n_subtokens;
    if (r.truncated) j["truncated"] = true;
    out += j.dump() + '\n';
  }
  return out;
}

struct ScoreFile {
  ScoreFileHeader header;
  std::vector<ScoreRecord> records;
};

inline ScoreFile parse_score_file(std::string_view data, std::string_view source = "<scores>") {
  ScoreFile f;
  bool have_header = false;
  std::size_t line_no = 0;
  for (std::string_view line : util::split(data, '\n')) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      if (internal::looks_non_finite(line)) throw DataError(where + ": non-finite score");
      throw ParseError(where + ": malformed JSON: " + e.what());
    }
    if (!have_header) {
      try {
        f.header.model_id = j.at("model_id").get<std::string>();
        f.header.scheme_id = j.at("scheme_id").get<std::string>();
        f.header.created = j.at("created").get<std::string>();
        f.header.mask_target = j.value("mask_target", true);
        f.header.config_hash = j.value("config_hash", "");
        f.header.stimuli_sha256 = j.value("stimuli_sha256", "");
        f.header.model_revision = j.value("model_revision", "");
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + ": bad score file header: " + e.what());
      }
      have_header = true;
      continue;
    }
    ScoreResponse r;
    try {
      r = internal::response_from_json(j);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(where + ": " + e.what());
    }
    f.records.push_back({r.stimulus_id, f.header.model_id, r.logit, r.log_prob,
                         r.n_subtokens, r.truncated});
  }
  if (!have_header) throw ParseError(std::string(source) + ": empty score file");
  return f;
}

inline ScoreFile read_score_file(const std::string& path) {
  return parse_score_file(util::read_file(path), path);
}

}  // namespace structbias
