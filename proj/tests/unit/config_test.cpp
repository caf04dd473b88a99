// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "mindprint/config.hpp"
#include "mindprint/error.hpp"
#include "test_util.hpp"

namespace mindprint::pipeline {
namespace {

TEST(Config, DemoConfigLoads) {
  const auto c = PipelineConfig::load(std::string(MINDPRINT_SOURCE_DIR) + "/configs/demo.json");
  EXPECT_EQ(c.target, "conspiracy");
  EXPECT_EQ(c.communities, (std::vector<std::string>{"news", "sports", "movies"}));
  EXPECT_EQ(c.buckets.size(), 3u);
  EXPECT_EQ(c.grid.size(), 2u);
  EXPECT_FALSE(c.grid[0].max_depth.has_value());
  EXPECT_EQ(c.grid[1].max_depth, 8u);
  EXPECT_EQ(c.n_perm, 20u);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_TRUE(c.dictionary.is_absolute());
  EXPECT_EQ(c.dictionary.filename(), "demo.dic");
  EXPECT_NO_THROW(c.validate(false));
}

TEST(Config, Defaults) {
  const auto c = PipelineConfig::from_json("{}");
  EXPECT_EQ(c.n_resamples, 5u);
  EXPECT_EQ(c.grid, forest::default_grid());
  EXPECT_EQ(c.n_perm, 100u);
  EXPECT_EQ(c.shap_sample_size, 700u);
  EXPECT_EQ(c.windows.exclusion_months, (std::vector<int>{6, 12, 18, 24}));
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(PipelineConfig::from_json(R"({"n_resample": 5})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"paths": {"dict": "x"}})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"grid": [{"trees": 5}]})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json("{not json"), ConfigError);
}

TEST(Config, InvalidValues) {
  EXPECT_THROW(PipelineConfig::from_json(R"j({"buckets": ["(3,2)"]})j"), ConfigError);
  auto c = PipelineConfig::from_json(R"({"target": "t", "communities": ["a"], "n_resamples": 0})");
  EXPECT_THROW(c.validate(false), ConfigError);
  c = PipelineConfig::from_json(R"({"target": "t", "communities": ["a"]})");
  c.filters.end_utc = c.filters.start_utc;
  EXPECT_THROW(c.validate(false), ConfigError);
  c = PipelineConfig::from_json(R"({"target": "t", "communities": ["t"]})");
  EXPECT_THROW(c.validate(false), ConfigError);
  c = PipelineConfig::from_json(
      R"({"target": "t", "communities": ["a"], "paths": {"input": "/nonexistent/x.ndjson",
          "dictionary": "/nonexistent/d.dic", "out_dir": "/tmp/x"}})");
  EXPECT_NO_THROW(c.validate(false));
  EXPECT_THROW(c.validate(true), ConfigError);
}

TEST(Config, HashIgnoresOutDirAndWorkers) {
  const std::string base = R"({"target": "t", "communities": ["a", "b"], "seed": 3)";
  const auto a = PipelineConfig::from_json(base + R"(, "workers": 1, "paths": {"out_dir": "/x"}})");
  const auto b = PipelineConfig::from_json(base + R"(, "workers": 8, "paths": {"out_dir": "/y"}})");
  const auto c = PipelineConfig::from_json(R"({"target": "t", "communities": ["a", "b"], "seed": 4})");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.canonical_json(), b.canonical_json());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash().size(), 64u);
  EXPECT_EQ(PipelineConfig::from_json(a.canonical_json()).hash(), a.hash());
}

TEST(Sha256, KnownDigests) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  testing::TempDir dir;
  testing::write_file(dir / "f", "abc");
  EXPECT_EQ(sha256_file(dir / "f"), sha256_hex("abc"));
}

}  // namespace
}  // namespace mindprint::pipeline
