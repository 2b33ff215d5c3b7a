#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "selfcheck/commands.hpp"

using namespace selfcheck;
using namespace selfcheck::commands;
namespace fs = std::filesystem;

namespace {

class CommandsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("selfcheck_cmd_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_.cache_dir = (dir_ / "cache").string();
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_synth(std::size_t concepts = 6, std::size_t n_samples = 20, double noise = 0.0) {
    synth::SynthSpec spec;
    spec.n_concepts = concepts;
    spec.sentences_per_passage = 5;
    spec.n_samples = n_samples;
    spec.consistency_noise = noise;
    spec.seed = 3;
    std::ofstream out(path("data.jsonl"));
    cmd_synth(spec, out);
    return path("data.jsonl");
  }

  std::string score(const std::string& dataset, EvidenceMode mode = EvidenceMode::Samples) {
    auto backends = BackendSet::from_config(config_);
    std::ofstream out(path("scores.jsonl"));
    cmd_score(config_, *backends, dataset, mode, out);
    return path("scores.jsonl");
  }

  // Writes one score row per sentence, computed from its label.
  std::string label_scores(const std::string& dataset, double (*f)(SentenceLabel)) {
    std::ofstream out(path("label_scores.jsonl"));
    for (const auto& r : load_dataset(dataset)) {
      for (std::size_t i = 0; i < r.passage.size(); ++i) {
        out << json{{"concept", r.passage.concept_name()}, {"sent_idx", i}, {"method", "nli"},
                    {"score", f((*r.passage.labels())[i])}, {"config_digest", config_.digest()},
                    {"dataset_digest", file_digest(dataset)}}
                   .dump()
            << '\n';
      }
    }
    return path("label_scores.jsonl");
  }

  fs::path dir_;
  RunConfig config_;
};

TEST_F(CommandsTest, SampleWritesOneRecordPerConcept) {
  config_.n_samples = 3;
  auto backends = BackendSet::from_config(config_);
  std::ostringstream out;
  const auto summary = cmd_sample(config_, *backends, {"Alan Turing", "Ada Lovelace"}, out);
  EXPECT_EQ(summary.written, 2u);
  EXPECT_TRUE(summary.failed.empty());
  std::istringstream in(out.str());
  const auto records = parse_dataset(in);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].passage.concept_name(), "Alan Turing");
  EXPECT_EQ(records[0].samples.size(), 3u);
  EXPECT_EQ(*records[0].config_digest, config_.digest());
  EXPECT_GT(backends->backend_calls(), 0u);

  // A second run against the warm cache is identical and makes no calls.
  auto again = BackendSet::from_config(config_);
  std::ostringstream out2;
  cmd_sample(config_, *again, {"Alan Turing", "Ada Lovelace"}, out2);
  EXPECT_EQ(out.str(), out2.str());
  EXPECT_EQ(again->backend_calls(), 0u);
}

TEST_F(CommandsTest, SampleDefaultsToTwentySamples) {
  config_.cache_dir.clear();
  auto backends = BackendSet::from_config(config_);
  std::ostringstream out;
  cmd_sample(config_, *backends, {"Grace Hopper"}, out);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_dataset(in).at(0).samples.size(), 20u);
}

TEST_F(CommandsTest, ScoreRowsCarryProvenance) {
  const auto data = write_synth(2);
  config_.methods = {"unigram-max", "nli"};
  const auto rows = load_scores(score(data));
  ASSERT_EQ(rows.size(), 2u * 5u * 2u);
  std::ifstream in(path("scores.jsonl"));
  std::string line;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    EXPECT_EQ(j["bounded"], j["method"] == "nli");
    EXPECT_EQ(j["config_digest"], config_.digest());
    EXPECT_EQ(j["dataset_digest"], file_digest(data));
    EXPECT_EQ(j["evidence"], "samples");
    EXPECT_FALSE(j["score"].is_null());
  }
}

TEST_F(CommandsTest, ScoreValidatesBeforeScoring) {
  const auto data = write_synth(2);
  config_.methods = {"unigram-max", "nope"};
  auto backends = BackendSet::from_config(config_);
  std::ostringstream out;
  EXPECT_THROW(cmd_score(config_, *backends, data, EvidenceMode::Samples, out), Error);
  config_.methods = {"unigram-max"};
  EXPECT_THROW(cmd_score(config_, *backends, data, EvidenceMode::Reference, out), Error);
  EXPECT_EQ(backends->backend_calls(), 0u);
  EXPECT_TRUE(out.str().empty());
  EXPECT_THROW(parse_evidence_mode("wiki"), Error);
}

TEST_F(CommandsTest, EvalPerfectAndConstantScorers) {
  const auto data = write_synth(10);
  EvalOptions o{label_scores(data, [](SentenceLabel l) { return label_value(l); }), data, "", "", {}, false};
  auto report = cmd_eval(config_, o);
  for (const char* task : {"nonfact", "factual"}) {
    EXPECT_DOUBLE_EQ(report["methods"]["nli"]["tasks"][task]["auc_pr"].get<double>(), 1.0) << task;
  }

  o.scores_path = label_scores(data, [](SentenceLabel) { return 0.5; });
  report = cmd_eval(config_, o);
  const auto& m = report["methods"]["nli"];
  const auto& counts = m["counts"];
  const double sentences = counts["sentences"].get<double>();
  EXPECT_NEAR(m["tasks"]["nonfact"]["auc_pr"].get<double>(),
              (sentences - counts["accurate"].get<double>()) / sentences, 1e-12);
  EXPECT_NEAR(m["tasks"]["factual"]["auc_pr"].get<double>(), counts["accurate"].get<double>() / sentences, 1e-12);
  EXPECT_TRUE(m["passage"]["spearman"].is_null());
}

TEST_F(CommandsTest, EvalSweepAndCurves) {
  const auto data = write_synth(8, 20, 0.5);
  config_.methods = {"unigram-max", "prompt"};
  EvalOptions o{score(data), data, path("report.json"), path("curves"), {1, 5, 10, 20}, false};
  const auto report = cmd_eval(config_, o);
  for (const char* m : {"unigram-max", "prompt"}) {
    ASSERT_EQ(report["sweep"][m].size(), 4u);
    EXPECT_EQ(report["sweep"][m][3]["n"], 20);
    // The last prefix is the full evidence set.
    EXPECT_NEAR(report["sweep"][m][3]["nonfact"].get<double>(),
                report["methods"][m]["tasks"]["nonfact"]["auc_pr"].get<double>(), 1e-12);
    EXPECT_TRUE(fs::exists(dir_ / "curves" / (std::string("sweep_") + m + ".csv")));
    EXPECT_TRUE(fs::exists(dir_ / "curves" / (std::string(m) + ".nonfact.csv")));
  }
  std::ifstream csv(dir_ / "curves" / "unigram-max.nonfact.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "recall,precision");
  EXPECT_TRUE(fs::exists(path("report.json")));

  o.sweep_n = {21};
  EXPECT_THROW(cmd_eval(config_, o), Error);
  o.sweep_n = {0};
  EXPECT_THROW(cmd_eval(config_, o), Error);
}

TEST_F(CommandsTest, EvalRefusesMismatchedConfigUnlessForced) {
  const auto data = write_synth(4);
  const auto scores = score(data);
  auto other = config_;
  other.ngram_delta = 0.5;
  EvalOptions o{scores, data, "", "", {}, false};
  EXPECT_THROW(cmd_eval(other, o), Error);
  o.force = true;
  EXPECT_NO_THROW(cmd_eval(other, o));
  // Method selection and cache location are not part of the digest.
  auto same = config_;
  same.methods = {"nli"};
  same.cache_dir = "elsewhere";
  o.force = false;
  EXPECT_NO_THROW(cmd_eval(same, o));
}

TEST_F(CommandsTest, EvalRequiresLabels) {
  std::ofstream(path("unlabelled.jsonl")) << R"({"concept":"x","response":"A b. C d.","samples":["A b."]})" << '\n';
  std::ofstream(path("empty_scores.jsonl")) << "";
  EvalOptions o{path("empty_scores.jsonl"), path("unlabelled.jsonl"), "", "", {}, false};
  EXPECT_THROW(cmd_eval(config_, o), Error);
}

TEST_F(CommandsTest, EndToEndIsDeterministic) {
  const auto data = write_synth(5);
  config_.methods = {"unigram-max", "bertscore", "qa", "greybox-avg-logprob"};
  const auto first = score(data);
  std::ifstream a(first);
  const std::string run1((std::istreambuf_iterator<char>(a)), {});
  config_.cache_dir = path("cache2");
  const auto second = score(data);
  std::ifstream b(second);
  const std::string run2((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(run1, run2);
  EXPECT_FALSE(run1.empty());
}

}  // namespace
