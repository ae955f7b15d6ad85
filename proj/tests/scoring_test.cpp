#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <thread>

#include <httplib.h>

#include "structbias/scoring.hpp"
#include "test_support.hpp"

namespace structbias {
namespace {

using testing::TempDir;

// Answers batches with a caller-supplied function and counts calls.
class FakeScorer : public Scorer {
 public:
  using Fn = std::function<std::vector<ScoreResponse>(const std::vector<const Stimulus*>&)>;
  explicit FakeScorer(Fn fn) : fn_(std::move(fn)) {}
  std::vector<ScoreResponse> score_batch(const std::vector<const Stimulus*>& batch,
                                         bool) override {
    ++calls;
    return fn_(batch);
  }
  int calls = 0;

 private:
  Fn fn_;
};

std::vector<ScoreResponse> honest(const std::vector<const Stimulus*>& batch) {
  std::vector<ScoreResponse> out;
  for (const Stimulus* st : batch) out.push_back({st->stimulus_id, 1.0, -2.0, 1, false});
  return out;
}

std::string cli() { return STRUCTBIAS_CLI; }

TEST(ScoreAll, CacheAvoidsRepeatRequests) {
  TempDir tmp;
  const auto stimuli = synthetic_stimuli(2, 1);
  FakeScorer scorer(honest);
  ScoreRunStats stats;
  {
    ScoreCache cache(tmp.path());
    const auto recs = score_all(stimuli, scorer, "m", 1, true, &cache, &stats);
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(stats.endpoint_calls, 3u);
    EXPECT_EQ(stats.cache_hits, 0u);
    EXPECT_EQ(recs[1].stimulus_id, stimuli[1].stimulus_id);
    EXPECT_EQ(recs[1].model_id, "m");
  }
  ScoreCache reopened(tmp.path());
  const auto again = score_all(stimuli, scorer, "m", 1, true, &reopened, &stats);
  EXPECT_EQ(stats.endpoint_calls, 0u);
  EXPECT_EQ(stats.cache_hits, 3u);
  EXPECT_EQ(scorer.calls, 3);
  EXPECT_EQ(again.size(), 3u);

  // a different model or masking mode is a different key
  score_all(stimuli, scorer, "other", 2, true, &reopened, &stats);
  EXPECT_EQ(stats.endpoint_calls, 2u);
  score_all(stimuli, scorer, "m", 8, false, &reopened, &stats);
  EXPECT_EQ(stats.endpoint_calls, 1u);
  EXPECT_EQ(stats.stimuli_requested, 3u);
}

TEST(ScoreAll, CacheKeyTracksStimulusContent) {
  auto stimuli = synthetic_stimuli(1, 0);
  const std::string k = ScoreCache::key_for(stimuli[0], "m", true);
  stimuli[0].text += "!";
  EXPECT_NE(ScoreCache::key_for(stimuli[0], "m", true), k);
}

TEST(ScoreAll, TornCacheLineIsRescored) {
  TempDir tmp;
  const auto stimuli = synthetic_stimuli(1, 1);
  FakeScorer scorer(honest);
  {
    ScoreCache cache(tmp.path());
    score_all(stimuli, scorer, "m", 4, true, &cache);
    std::ofstream(cache.file_for("m"), std::ios::app) << "{\"key\":\"trunc";
  }
  ScoreCache cache(tmp.path());
  ScoreRunStats stats;
  score_all(stimuli, scorer, "m", 4, true, &cache, &stats);
  EXPECT_EQ(stats.cache_hits, 2u);
}

TEST(ScoreAll, MissingIdIsAProtocolErrorNamingIt) {
  const auto stimuli = synthetic_stimuli(2, 2);
  FakeScorer drop([](const std::vector<const Stimulus*>& b) {
    auto out = honest(b);
    out.erase(out.begin() + 1);
    return out;
  });
  try {
    score_all(stimuli, drop, "m", 10, true);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find(stimuli[1].stimulus_id), std::string::npos) << e.what();
  }
}

TEST(ScoreAll, DuplicateAndUnknownIds) {
  const auto stimuli = synthetic_stimuli(1, 1);
  FakeScorer dup([](const std::vector<const Stimulus*>& b) {
    auto out = honest(b);
    out.push_back(out[0]);
    return out;
  });
  EXPECT_THROW(score_all(stimuli, dup, "m", 10, true), ProtocolError);
  FakeScorer stranger([](const std::vector<const Stimulus*>& b) {
    auto out = honest(b);
    out.push_back({"ghost", 0.0, -1.0, 1, false});
    return out;
  });
  try {
    score_all(stimuli, stranger, "m", 10, true);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(ScoreAll, RejectsEmptyInputAndBadSpans) {
  FakeScorer scorer(honest);
  EXPECT_THROW(score_all({}, scorer, "m", 1, true), ContractError);
  auto stimuli = synthetic_stimuli(1, 0);
  stimuli[0].target_char_end = 99;
  EXPECT_THROW(score_all(stimuli, scorer, "m", 1, true), ValidationError);
  EXPECT_EQ(scorer.calls, 0);
}

TEST(ResponseParsing, NonFiniteAndOutOfRangeValues) {
  using internal::parse_response_lines;
  EXPECT_THROW(parse_response_lines(R"({"stimulus_id":"a","logit":NaN,"log_prob":-1,"n_subtokens":1})"),
               DataError);
  EXPECT_THROW(parse_response_lines(R"({"stimulus_id":"a","logit":1,"log_prob":-Infinity,"n_subtokens":1})"),
               DataError);
  EXPECT_THROW(parse_response_lines(R"({"stimulus_id":"a","logit":null,"log_prob":-1,"n_subtokens":1})"),
               DataError);
  EXPECT_THROW(parse_response_lines(R"({"stimulus_id":"a","logit":1,"log_prob":0.5,"n_subtokens":1})"),
               DataError);
  EXPECT_THROW(parse_response_lines(R"({"stimulus_id":"a","logit":1,"log_prob":-1,"n_subtokens":0})"),
               DataError);
  EXPECT_THROW(parse_response_lines(R"({"stimulus_id":"a","logit":1})"), ProtocolError);
  EXPECT_THROW(parse_response_lines(R"({"error":"model not loaded"})"), ProtocolError);
  EXPECT_THROW(parse_response_lines("garbage"), ProtocolError);
  const auto ok = parse_response_lines(
      "{\"stimulus_id\":\"a\",\"logit\":2.5,\"log_prob\":-0.25,\"n_subtokens\":3,\"truncated\":true}\n\n");
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_EQ(ok[0].n_subtokens, 3);
  EXPECT_TRUE(ok[0].truncated);
}

TEST(RequestJson, CarriesStimulusAndMaskFlag) {
  const auto st = synthetic_stimuli(1, 0)[0];
  const auto j = request_json(st, false);
  EXPECT_EQ(j["stimulus_id"], st.stimulus_id);
  EXPECT_EQ(j["text"], st.text);
  EXPECT_EQ(j["target_char_start"], 6);
  EXPECT_EQ(j["mask_target"], false);
}

TEST(SubprocessScorer, ReferenceScorerOverStdio) {
  const auto stimuli = synthetic_stimuli(3, 4);
  ScorerEndpoint ep;
  ep.kind = EndpointKind::kSubprocess;
  ep.address = cli() + " reference-scorer --model-id multi --beta 1 --seed 3";
  ep.model_id = "multi";
  ep.batch_size = 3;
  ScoreRunStats stats;
  const auto recs = score_all(stimuli, ep, nullptr, &stats);
  EXPECT_EQ(stats.endpoint_calls, 3u);
  ReferenceScorerOptions opts;
  opts.beta = 1.0;
  opts.seed = 3;
  for (std::size_t i = 0; i < stimuli.size(); ++i) {
    const ScoreRecord want = reference_score(stimuli[i], "multi", opts);
    EXPECT_NEAR(recs[i].log_prob, want.log_prob, 1e-12);
    EXPECT_NEAR(recs[i].logit, want.logit, 1e-12);
  }
}

TEST(SubprocessScorer, FailingCommandIsATransportError) {
  SubprocessScorer bad("exit 3");
  const auto stimuli = synthetic_stimuli(1, 0);
  EXPECT_THROW(score_all(stimuli, bad, "m", 1, true), TransportError);
  SubprocessScorer erroring("printf '{\"error\":\"boom\"}\\n'");
  EXPECT_THROW(score_all(stimuli, erroring, "m", 1, true), ProtocolError);
}

TEST(HttpScorer, PostsBatchesToScoreEndpoint) {
  httplib::Server server;
  std::atomic<int> posts{0};
  server.Post("/v1/score", [&](const httplib::Request& req, httplib::Response& res) {
    ++posts;
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& item : body) {
      const Stimulus st = stimulus_from_json(item);
      EXPECT_TRUE(item.at("mask_target").get<bool>());
      const ScoreRecord r = reference_score(st, "mono");
      out.push_back({{"stimulus_id", r.stimulus_id},
                     {"logit", r.logit},
                     {"log_prob", r.log_prob},
                     {"n_subtokens", r.n_subtokens}});
    }
    res.set_content(out.dump(), "application/json");
  });
  server.Post("/broken/score", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto stimuli = synthetic_stimuli(5, 5);
  ScorerEndpoint ep;
  ep.kind = EndpointKind::kHttp;
  ep.address = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
  ep.model_id = "mono";
  ep.batch_size = 4;
  const auto recs = score_all(stimuli, ep);
  EXPECT_EQ(posts.load(), 3);
  for (std::size_t i = 0; i < stimuli.size(); ++i)
    EXPECT_DOUBLE_EQ(recs[i].log_prob, reference_score(stimuli[i], "mono").log_prob);

  ep.address = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  EXPECT_THROW(score_all(stimuli, ep), TransportError);
  server.stop();
  th.join();
  ep.address = "http://127.0.0.1:" + std::to_string(port);
  EXPECT_THROW(score_all(stimuli, ep), TransportError);
}

TEST(FileScorer, ServesPrecomputedResponses) {
  TempDir tmp;
  const auto stimuli = synthetic_stimuli(2, 2);
  std::string lines;
  for (auto it = stimuli.rbegin(); it != stimuli.rend(); ++it) {
    const ScoreRecord r = reference_score(*it, "mono");
    lines += nlohmann::json{{"stimulus_id", r.stimulus_id}, {"logit", r.logit},
                            {"log_prob", r.log_prob}, {"n_subtokens", 1}}
                 .dump() +
             "\n";
  }
  util::write_file(tmp.file("resp.jsonl"), lines);
  ScorerEndpoint ep{EndpointKind::kFile, tmp.file("resp.jsonl"), "mono", 3, true, ""};
  const auto recs = score_all(stimuli, ep);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[0].stimulus_id, stimuli[0].stimulus_id);

  auto more = synthetic_stimuli(3, 2);
  EXPECT_THROW(score_all(more, ep), ProtocolError);
}

TEST(ReferenceScorer, DeterministicAndInRange) {
  const auto stimuli = synthetic_stimuli(200, 200);
  for (const Stimulus& st : stimuli) {
    const ScoreRecord a = reference_score(st, "mono");
    EXPECT_EQ(a.log_prob, reference_score(st, "mono").log_prob);
    EXPECT_NE(a.log_prob, reference_score(st, "multi").log_prob);
    EXPECT_GE(a.log_prob, kReferenceLogProbMin);
    EXPECT_LE(a.log_prob, kReferenceLogProbMax);
    ReferenceScorerOptions big;
    big.beta = 10.0;
    const ScoreRecord b = reference_score(st, "multi", big);
    EXPECT_GE(b.log_prob, kReferenceLogProbMin);
    EXPECT_LE(b.log_prob, kReferenceLogProbMax);
  }
  ReferenceScorerOptions huge;
  huge.beta = 12;
  EXPECT_THROW(reference_score(stimuli[0], "multi", huge), ConfigError);
}

double mean_gap(const std::vector<Stimulus>& stimuli, const std::string& model,
                const ReferenceScorerOptions& opts) {
  double par = 0, diff = 0;
  std::size_t np = 0, nd = 0;
  for (const Stimulus& st : stimuli) {
    const double lp = reference_score(st, model, opts).log_prob;
    if (st.corpus_label == CorpusLabel::kParallel) {
      par += lp;
      ++np;
    } else {
      diff += lp;
      ++nd;
    }
  }
  return par / np - diff / nd;
}

TEST(ReferenceScorer, PlantedBiasShowsInMeanLogProb) {
  const auto stimuli = synthetic_stimuli(5000, 5000);
  ReferenceScorerOptions opts;
  opts.beta = 1.0;
  EXPECT_NEAR(mean_gap(stimuli, "multi", opts), 1.0, 0.05);
  EXPECT_NEAR(mean_gap(stimuli, "mono", opts), 0.0, 0.05);
  opts.beta = 0.0;
  EXPECT_NEAR(mean_gap(stimuli, "multi", opts), 0.0, 0.05);
}

TEST(ReferenceScorer, ZeroBetaIgnoresLabels) {
  auto stimuli = synthetic_stimuli(50, 0);
  for (Stimulus st : stimuli) {
    const double a = reference_score(st, "multi").log_prob;
    st.corpus_label = CorpusLabel::kDifferent;
    EXPECT_EQ(a, reference_score(st, "multi").log_prob);
  }
}

TEST(ValidateScores, ReportsMissingDuplicateUnknown) {
  const auto stimuli = synthetic_stimuli(2, 1);
  std::vector<ScoreRecord> recs;
  for (const Stimulus& st : stimuli) recs.push_back(reference_score(st, "mono"));
  EXPECT_TRUE(validate_scores(stimuli, recs).ok());
  EXPECT_EQ(validate_scores(stimuli, recs).coverage["mono"]["parallel"].covered, 2u);

  auto broken = recs;
  broken.pop_back();
  broken.push_back(recs[0]);
  broken.push_back({"ghost", "mono", 0, -1, 1, false});
  const ScoreValidation v = validate_scores(stimuli, broken);
  EXPECT_EQ(v.defects.size(), 3u);
  EXPECT_EQ(v.coverage.at("mono").at("different").covered, 0u);
}

TEST(ScoreFile, RoundTripAndErrors) {
  const auto stimuli = synthetic_stimuli(2, 2);
  std::vector<ScoreRecord> recs;
  for (const Stimulus& st : stimuli) recs.push_back(reference_score(st, "mono"));
  recs[1].truncated = true;
  recs[2].n_subtokens = 4;
  const ScoreFileHeader h{"mono", "synthetic", "2020-01-01T00:00:00Z", false, "abc", "def", "r1"};
  const ScoreFile f = parse_score_file(score_file_contents(h, recs));
  EXPECT_EQ(f.header.model_id, "mono");
  EXPECT_FALSE(f.header.mask_target);
  EXPECT_EQ(f.header.stimuli_sha256, "def");
  EXPECT_EQ(f.header.model_revision, "r1");
  ASSERT_EQ(f.records.size(), 4u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(f.records[i].stimulus_id, recs[i].stimulus_id);
    EXPECT_DOUBLE_EQ(f.records[i].log_prob, recs[i].log_prob);
    EXPECT_DOUBLE_EQ(f.records[i].logit, recs[i].logit);
    EXPECT_EQ(f.records[i].n_subtokens, recs[i].n_subtokens);
    EXPECT_EQ(f.records[i].truncated, recs[i].truncated);
  }
  EXPECT_THROW(parse_score_file(""), ParseError);
  EXPECT_THROW(parse_score_file("{\"model_id\":\"m\"}\n"), ParseError);
  EXPECT_THROW(parse_score_file(score_file_contents(h, {}) +
                                "{\"stimulus_id\":\"a\",\"logit\":NaN,\"log_prob\":-1,\"n_subtokens\":1}\n"),
               DataError);
}

TEST(ScoreFile, CreatedHonoursSourceDateEpoch) {
  ::setenv("SOURCE_DATE_EPOCH", "86400", 1);
  EXPECT_EQ(iso8601_now(), "1970-01-02T00:00:00Z");
  ::unsetenv("SOURCE_DATE_EPOCH");
}

}  // namespace
}  // namespace structbias
