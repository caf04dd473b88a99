// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <memory>

#include "json.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"
#include "mindprint/pipeline.hpp"
#include "mindprint/synth.hpp"
#include "test_util.hpp"

namespace mindprint::pipeline {
namespace {

namespace fs = std::filesystem;

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = std::make_unique<testing::TempDir>();
    synth::SignalSpec spec;
    spec.n_users_pos = 24;
    spec.n_users_neg = 60;
    spec.communities = {"news", "sports"};
    spec.target_community = "conspiracy";
    spec.comments_per_user = {22, 30};
    spec.tokens_per_comment = {15, 25};
    spec.target_comments = {1, 4};
    spec.vocab = synth::default_vocab();
    spec.planted = {{"certain", {0.06, 0.01}}, {"power", {0.05, 0.01}}};
    spec.seed = 3;
    synth::bind_lexicon(spec, lexicon::load_lexicon(dictionary()));
    synth::write_corpus(synth::generate_corpus(spec), dir_->path() / "corpus");
  }
  static void TearDownTestSuite() { dir_.reset(); }

  static fs::path dictionary() { return fs::path(MINDPRINT_SOURCE_DIR) / "data/demo.dic"; }

  static PipelineConfig config(const std::string& out) {
    PipelineConfig c;
    c.inputs = {dir_->path() / "corpus/comments.ndjson"};
    c.dictionary = dictionary();
    c.out_dir = dir_->path() / out;
    c.target = "conspiracy";
    c.communities = {"news", "sports"};
    c.filters.start_utc = 1420070400;
    c.filters.end_utc = 1577836799;
    c.n_resamples = 2;
    forest::HyperParams hp;
    hp.n_trees = 15;
    c.grid = {hp};
    c.cv_folds = 3;
    c.n_perm = 3;
    c.shap_sample_size = 20;
    c.windows.exclusion_months = {6};
    c.siamese.train.epochs = 3;
    c.siamese.train.widths = {8, 8, 4};
    c.seed = 11;
    c.workers = 2;
    return c;
  }

  static inline std::unique_ptr<testing::TempDir> dir_;
};

TEST_F(PipelineTest, MissingArtifactNamesSubcommand) {
  const auto c = config("missing");
  try {
    run_dataset(c);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("featurize"), std::string::npos) << e.what();
  }
  try {
    run_featurize(c);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("ingest"), std::string::npos) << e.what();
  }
}

TEST_F(PipelineTest, EndToEndBundleVerifies) {
  const auto c = config("run");
  run_study_one(c);
  run_study_two(c);
  const auto bundle = run_report(c);
  EXPECT_EQ(bundle.size(), 64u);

  const auto train = read_csv_file(c.out_dir / "results/train.csv");
  EXPECT_EQ(train.rows.size(), 4u);  // 2 communities x 2 resamples
  for (const auto& row : train.rows) EXPECT_GT(parse_double(row[train.column("accuracy")]), 0.7);
  const auto perm = read_csv_file(c.out_dir / "results/permtest.csv");
  EXPECT_EQ(perm.rows.size(), 4u);
  for (const auto& row : perm.rows) {
    const double p = parse_double(row[perm.column("p_value")]);
    EXPECT_GE(p, 0.25);
    EXPECT_LE(p, 1.0);
  }
  EXPECT_TRUE(fs::exists(c.out_dir / "cluster/dendrogram.nwk"));
  EXPECT_TRUE(fs::exists(c.out_dir / "results/windows_summary.json"));
  EXPECT_TRUE(fs::exists(c.out_dir / "results/siamese.csv"));

  const auto manifest = testing::slurp(c.out_dir / "manifest.json");
  EXPECT_TRUE(validate_manifest(manifest).empty());
  const auto j = nlohmann::json::parse(manifest);
  EXPECT_EQ(j["config_hash"], c.hash());
  EXPECT_EQ(j["bundle_hash"], bundle);

  const auto ok = verify_report(c.out_dir);
  EXPECT_TRUE(ok.ok);
  EXPECT_TRUE(ok.problems.empty());

  // A second run into a fresh directory gives the same bundle, even with a
  // different worker count.
  auto again = config("run2");
  again.workers = 1;
  run_study_one(again);
  run_study_two(again);
  EXPECT_EQ(run_report(again), bundle);

  // Tampering is detected.
  {
    std::ofstream out(c.out_dir / "results/train.csv", std::ios::app);
    out << "\n";
  }
  fs::remove(c.out_dir / "cluster/pca.csv");
  testing::write_file(c.out_dir / "extra.txt", "x");
  const auto bad = verify_report(c.out_dir);
  EXPECT_FALSE(bad.ok);
  std::string all;
  for (const auto& p : bad.problems) all += p + "\n";
  EXPECT_NE(all.find("results/train.csv"), std::string::npos) << all;
  EXPECT_NE(all.find("cluster/pca.csv"), std::string::npos) << all;
  EXPECT_NE(all.find("extra.txt"), std::string::npos) << all;
}

TEST_F(PipelineTest, ValidateManifestFindsStructuralProblems) {
  EXPECT_FALSE(validate_manifest("not json").empty());
  EXPECT_FALSE(validate_manifest("{}").empty());
  EXPECT_FALSE(validate_manifest(R"({"format": "mindprint-report", "files": "x"})").empty());
}

TEST(TaskSeed, DistinctPerComponent) {
  const auto base = task_seed(1, "dataset", "news", "any/all", 0);
  EXPECT_EQ(base, task_seed(1, "dataset", "news", "any/all", 0));
  EXPECT_NE(base, task_seed(2, "dataset", "news", "any/all", 0));
  EXPECT_NE(base, task_seed(1, "train", "news", "any/all", 0));
  EXPECT_NE(base, task_seed(1, "dataset", "sports", "any/all", 0));
  EXPECT_NE(base, task_seed(1, "dataset", "news", "any/pre", 0));
  EXPECT_NE(base, task_seed(1, "dataset", "news", "any/all", 1));
}

}  // namespace
}  // namespace mindprint::pipeline
