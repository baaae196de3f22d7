// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "geoae/errors.hpp"
#include "geoae/experiments.hpp"
#include "geoae/io.hpp"
#include "json.hpp"

namespace geoae {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() /
                     ("geoae_exp_" + std::string(::testing::UnitTest::GetInstance()
                                                     ->current_test_info()
                                                     ->name()));
  fs::remove_all(d);
  return d;
}

ExperimentConfig tiny_decoder(const fs::path& out) {
  ExperimentConfig c = suite_config("position-decoder", 4);
  c.dataset.count = 120;
  c.train.epochs = 3;
  c.train.batch = 20;
  c.out_dir = out;
  return c;
}

TEST(SuiteConfig, EverySuiteValidates) {
  for (const std::string& s : suite_names()) EXPECT_NO_THROW(suite_config(s, 1).validate()) << s;
}

TEST(SuiteConfig, UnknownSuiteListsAvailable) {
  try {
    suite_config("disk-everything", 0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("disk-hole"), std::string::npos);
  }
}

TEST(SuiteConfig, SeedsAreDerivedFromTheRoot) {
  const ExperimentConfig a = suite_config("disk-hole", 1), b = suite_config("disk-hole", 2);
  EXPECT_NE(a.dataset.seed, b.dataset.seed);
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash(), suite_config("disk-hole", 1).hash());
}

TEST(ConfigJson, OverridesOnTopOfSuiteDefaults) {
  const ExperimentConfig c = config_from_json(
      R"({"suite": "disk-hole", "seed": 3, "train": {"reg": "psi3", "lambda": 10},
          "dataset": {"count": 500}, "analyses": ["latent"]})");
  EXPECT_EQ(c.train.reg, Regularizer::kPsi3);
  EXPECT_EQ(c.train.lambda, 10.0);
  EXPECT_EQ(c.train.batch, 300u);
  EXPECT_EQ(c.dataset.count, 500u);
  ASSERT_EQ(c.dataset.exclusions.size(), 1u);
  EXPECT_EQ(c.dataset.exclusions[0].low, 11.0);
  EXPECT_EQ(c.analyses, std::vector<std::string>{"latent"});
}

TEST(ConfigJson, MalformedIsRejected) {
  EXPECT_THROW(config_from_json("{suite"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"train": {"epochs": "many"}})"), ConfigError);
}

TEST(ConfigJson, RoundTripsThroughToJson) {
  ExperimentConfig c = suite_config("disk-restricted-nobias", 9);
  c.train.epochs = 17;
  const ExperimentConfig back = config_from_json(c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
}

TEST(Validation, NegativeLambdaRejectedBeforeAnyWork) {
  ExperimentConfig c = suite_config("disk-hole", 0);
  c.train.reg = Regularizer::kPsi3;
  c.train.lambda = -1.0;
  c.out_dir = scratch_dir();
  EXPECT_THROW(run_suite(c), ConfigError);
  EXPECT_FALSE(fs::exists(c.out_dir));
}

TEST(Validation, UnknownAnalysisAndWrongDataKind) {
  ExperimentConfig c = suite_config("disk-baseline", 0);
  c.analyses = {"tea-leaves"};
  EXPECT_THROW(c.validate(), ConfigError);
  c = suite_config("disk-baseline", 0);
  c.dataset = DatasetSpec::diracs(100, 1);
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Hashes, TrainingHashIgnoresAnalyses) {
  ExperimentConfig a = suite_config("disk-nobias", 0), b = a;
  b.analyses = {"rank1"};
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.training_hash(), b.training_hash());
  b.train.epochs = 10;
  EXPECT_NE(a.training_hash(), b.training_hash());
}

TEST(MaxObservedRadius, FollowsExclusionsAtTheTop) {
  DatasetSpec s = DatasetSpec::disks(10, 0);
  EXPECT_EQ(max_observed_radius(s), 32.0);
  s.exclusions = {{11.0, 18.0}};
  EXPECT_EQ(max_observed_radius(s), 32.0);
  s.exclusions = {{18.0, 32.0}};
  EXPECT_EQ(max_observed_radius(s), 18.0);
  s.exclusions = {{18.0, 32.0}, {10.0, 18.0}};
  EXPECT_EQ(max_observed_radius(s), 10.0);
}

TEST(RunSuite, HandcraftedReportsExactness) {
  ExperimentConfig c = suite_config("position-handcrafted", 0);
  c.out_dir = scratch_dir();
  const json s = json::parse(run_suite(c));
  EXPECT_EQ(s["exactness"]["level6_correct"], 64);
  EXPECT_TRUE(s["exactness"]["exact"].get<bool>());
  EXPECT_TRUE(fs::exists(c.out_dir / "exactness.csv"));
  EXPECT_TRUE(fs::exists(c.out_dir / "config.json"));
  fs::remove_all(c.out_dir);
}

TEST(RunSuite, RerunIsByteIdentical) {
  const fs::path a = scratch_dir() / "a", b = scratch_dir().concat("_b");
  fs::remove_all(b);
  run_suite(tiny_decoder(a));
  run_suite(tiny_decoder(b));
  for (const char* f : {"decoding.csv", "summary.json", "config.json", "train/history.csv",
                        "train/model.ckpt", "dataset/manifest.json"}) {
    EXPECT_EQ(read_text(a / f), read_text(b / f)) << f;
  }
  fs::remove_all(a.parent_path());
  fs::remove_all(b);
}

TEST(RunSuite, ReuseSkipsTrainingWhenOnlyAnalysesChange) {
  ExperimentConfig c = tiny_decoder(scratch_dir());
  run_suite(c);
  const auto stamp = fs::last_write_time(c.out_dir / "train" / "model.ckpt");
  c.analyses = {"decoding"};
  const json s = json::parse(run_suite(c, true));
  EXPECT_TRUE(s.contains("decoding"));
  EXPECT_EQ(fs::last_write_time(c.out_dir / "train" / "model.ckpt"), stamp);
  fs::remove_all(c.out_dir);
}

TEST(RunSuite, FailureLeavesMarker) {
  ExperimentConfig c = tiny_decoder(scratch_dir());
  c.analyses = {"rank1"};  // needs a disk autoencoder
  EXPECT_THROW(run_suite(c), ConfigError);
  EXPECT_TRUE(fs::exists(c.out_dir / "FAILED"));
  EXPECT_TRUE(fs::exists(c.out_dir / "train" / "model.ckpt"));
  EXPECT_FALSE(fs::exists(c.out_dir / "summary.json"));
  fs::remove_all(c.out_dir);
}

TEST(Figures, UnknownNameListsTargets) {
  try {
    reproduce_figure("fig1", 0, 1, scratch_dir(), 1);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("fig11"), std::string::npos);
  }
}

}  // namespace
}  // namespace geoae
