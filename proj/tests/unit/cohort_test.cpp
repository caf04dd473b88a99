// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mindprint/cohort.hpp"
#include "mindprint/error.hpp"
#include "mindprint/random.hpp"
#include "test_util.hpp"

namespace mindprint::cohort {
namespace {

using Names = std::vector<std::string>;

TEST(ActivityBucket, ContainsAndLabel) {
  const auto b = ActivityBucket::canonical();
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[0].label(), "(0,1]");
  EXPECT_EQ(b[1].label(), "(1,10)");
  EXPECT_EQ(b[2].label(), "[10,100)");
  EXPECT_EQ(b[3].label(), "[100,inf)");
  // Every positive count falls in exactly one canonical bucket.
  for (std::int64_t n : {1, 2, 9, 10, 99, 100, 5000}) {
    int hits = 0;
    for (const auto& x : b) hits += x.contains(n);
    EXPECT_EQ(hits, 1) << n;
  }
  EXPECT_FALSE(b[0].contains(0));
  EXPECT_TRUE(ActivityBucket::any_activity().contains(1));
  EXPECT_FALSE(ActivityBucket::any_activity().contains(0));
}

TEST(ActivityBucket, ParseRoundTrip) {
  for (const auto& b : ActivityBucket::canonical()) EXPECT_EQ(ActivityBucket::parse(b.label()), b);
  EXPECT_THROW(ActivityBucket::parse("(5,5)"), ConfigError);
  EXPECT_THROW(ActivityBucket::parse("1,2"), ConfigError);
  EXPECT_THROW(ActivityBucket::parse("(x,2]"), ConfigError);
}

// a..h comment in "news"; the target counts are 0,0,0,1,2,10,100,0.
corpus::ActivityIndex fixture_index() {
  corpus::ActivityIndex index("target");
  const std::map<std::string, int> target{{"d", 1}, {"e", 2}, {"f", 10}, {"g", 100}};
  for (const char* a : {"a", "b", "c", "d", "e", "f", "g", "h"}) {
    for (int i = 0; i < 20; ++i) index.add(a, "news", 1000 + i);
    auto it = target.find(a);
    if (it != target.end()) {
      for (int i = 0; i < it->second; ++i) index.add(a, "target", 5000 + i);
    }
  }
  return index;
}

TEST(LabelPools, AnyActivity) {
  const auto index = fixture_index();
  const corpus::AuthorSet eligible{"a", "b", "c", "d", "e", "f", "g", "h"};
  const auto pools = label_pools(index, "news", eligible);
  EXPECT_EQ(pools.positives, (Names{"d", "e", "f", "g"}));
  EXPECT_EQ(pools.negatives, (Names{"a", "b", "c", "h"}));
}

TEST(LabelPools, BucketsAndEligibility) {
  const auto index = fixture_index();
  const corpus::AuthorSet eligible{"a", "b", "d", "e", "f", "g"};
  const auto b = ActivityBucket::canonical();
  EXPECT_EQ(label_pools(index, "news", eligible, b[0]).positives, (Names{"d"}));
  EXPECT_EQ(label_pools(index, "news", eligible, b[1]).positives, (Names{"e"}));
  EXPECT_EQ(label_pools(index, "news", eligible, b[2]).positives, (Names{"f"}));
  const auto top = label_pools(index, "news", eligible, b[3]);
  EXPECT_EQ(top.positives, (Names{"g"}));
  // Positives of other buckets are never negatives.
  EXPECT_EQ(top.negatives, (Names{"a", "b"}));
}

TEST(LabelPools, NoPositivesIsError) {
  const auto index = fixture_index();
  EXPECT_THROW(label_pools(index, "news", {"a", "b"}), DataError);
}

// ---------------------------------------------------------------------------

struct Store {
  std::map<std::string, std::vector<double>> vectors;
  EmbeddingLookup lookup() const {
    return [this](const std::string& a) -> const std::vector<double>* {
      auto it = vectors.find(a);
      return it == vectors.end() ? nullptr : &it->second;
    };
  }
};

Names names(const char* prefix, int n) {
  Names out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(1000 + i));
  return out;
}

Store store_for(const Names& a, const Names& b, std::uint64_t seed = 1) {
  Store s;
  Rng rng(seed);
  for (const auto* list : {&a, &b}) {
    for (const auto& n : *list) s.vectors[n] = {rng.uniform(0, 10), rng.uniform(0, 10), 3.0};
  }
  return s;
}

TEST(BalancedDataset, SizesAndOrder) {
  const auto pos = names("p", 10), neg = names("n", 100);
  const auto s = store_for(pos, neg);
  const auto ds = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 7);
  ASSERT_EQ(ds.rows.size(), 20u);
  EXPECT_EQ(ds.count(1), 10u);
  EXPECT_EQ(ds.count(0), 10u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(ds.rows[i].author, pos[i]);
    EXPECT_EQ(ds.rows[i].label, 1);
    EXPECT_EQ(ds.rows[i].features, s.vectors.at(pos[i]));
  }
  std::set<std::string> sampled;
  for (int i = 10; i < 20; ++i) {
    EXPECT_EQ(ds.rows[i].label, 0);
    sampled.insert(ds.rows[i].author);
    EXPECT_TRUE(std::binary_search(neg.begin(), neg.end(), ds.rows[i].author));
  }
  EXPECT_EQ(sampled.size(), 10u);
}

TEST(BalancedDataset, DeterministicPerSeedAndPositivesShared) {
  const auto pos = names("p", 10), neg = names("n", 100);
  const auto s = store_for(pos, neg);
  const auto a = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 11);
  const auto b = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 11);
  EXPECT_EQ(a, b);
  std::set<std::set<std::string>> negative_sets;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto ds = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, seed);
    std::set<std::string> n;
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
      if (i < 10) {
        EXPECT_EQ(ds.rows[i].author, pos[i]);
      } else {
        n.insert(ds.rows[i].author);
      }
    }
    negative_sets.insert(n);
  }
  EXPECT_GT(negative_sets.size(), 1u);
}

TEST(BalancedDataset, NegativeSamplingIsRoughlyUniform) {
  const auto pos = names("p", 5), neg = names("n", 20);
  const auto s = store_for(pos, neg);
  std::map<std::string, int> hits;
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const auto ds = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 100 + r);
    for (std::size_t i = 5; i < ds.rows.size(); ++i) ++hits[ds.rows[i].author];
  }
  // Each negative is drawn with probability 1/4; binomial sd ~ 27.
  for (const auto& n : neg) EXPECT_NEAR(hits[n], reps / 4.0, 6 * std::sqrt(reps * 0.25 * 0.75));
}

TEST(BalancedDataset, MissingEmbeddingsAreDropped) {
  const auto pos = names("p", 6), neg = names("n", 30);
  auto s = store_for(pos, neg);
  s.vectors.erase(pos[2]);
  s.vectors.erase(neg[0]);
  const auto ds = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 3);
  EXPECT_EQ(ds.count(1), 5u);
  EXPECT_EQ(ds.count(0), 5u);
  std::size_t dropped = 0;
  for (const auto& [reason, n] : ds.drops) dropped += n;
  EXPECT_GE(dropped, 1u);
}

TEST(BalancedDataset, Errors) {
  const auto pos = names("p", 10), neg = names("n", 9);
  const auto s = store_for(pos, neg);
  EXPECT_THROW(build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 1), DataError);
  const Names overlap{"p1000", "n1000", "n1001"};
  EXPECT_THROW(build_balanced_dataset(s.lookup(), s.lookup(), pos, overlap, 1), DataError);
}

// ---------------------------------------------------------------------------

TEST(Split, StratifiedEightyTwenty) {
  const auto pos = names("p", 10), neg = names("n", 100);
  const auto s = store_for(pos, neg);
  auto ds = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 7);
  const auto split = split_and_normalize(ds, 9);
  EXPECT_EQ(split.train.size(), 16u);
  EXPECT_EQ(split.test.size(), 4u);
  EXPECT_EQ(split.train.count(1), 8u);
  EXPECT_EQ(split.test.count(1), 2u);
  // Disjoint and covering.
  auto tr = ds.authors(Split::kTrain), te = ds.authors(Split::kTest);
  std::set<std::string> all(tr.begin(), tr.end());
  for (const auto& a : te) EXPECT_TRUE(all.insert(a).second) << a;
  EXPECT_EQ(all.size(), 20u);
}

TEST(Split, RoundsPerClass) {
  // 7 per class: round(5.6) = 6 train, 1 test.
  const auto pos = names("p", 7), neg = names("n", 7);
  const auto s = store_for(pos, neg);
  auto ds = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 7);
  const auto split = split_and_normalize(ds, 1);
  EXPECT_EQ(split.train.count(1), 6u);
  EXPECT_EQ(split.train.count(0), 6u);
  EXPECT_EQ(split.test.size(), 2u);
}

TEST(Split, NormalizerUsesTrainOnly) {
  const auto pos = names("p", 20), neg = names("n", 40);
  const auto s = store_for(pos, neg, 4);
  auto ds = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 2);
  const auto split = split_and_normalize(ds, 5);
  const auto& x = split.train.x;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double sum = 0, sq = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) sum += x(r, c);
    const double mean = sum / x.rows();
    for (std::size_t r = 0; r < x.rows(); ++r) sq += (x(r, c) - mean) * (x(r, c) - mean);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    if (c == 2) {
      // Constant feature maps to 0.
      EXPECT_EQ(sq, 0.0);
      EXPECT_EQ(split.normalizer.stddev[2], 1.0);
    } else {
      const double sd = std::sqrt(sq / x.rows());
      const double sd1 = std::sqrt(sq / (x.rows() - 1));
      EXPECT_TRUE(std::abs(sd - 1) < 1e-9 || std::abs(sd1 - 1) < 1e-9) << sd << " " << sd1;
    }
  }
  // Test rows are transformed with the same parameters.
  const auto te = ds.authors(Split::kTest);
  for (std::size_t r = 0; r < te.size(); ++r) {
    const auto want = split.normalizer.apply(s.vectors.at(te[r]));
    for (std::size_t c = 0; c < want.size(); ++c) EXPECT_DOUBLE_EQ(split.test.x(r, c), want[c]);
  }
}

TEST(Split, TooSmall) {
  const auto pos = names("p", 4), neg = names("n", 10);
  const auto s = store_for(pos, neg);
  auto ds = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 1);
  EXPECT_THROW(split_and_normalize(ds, 1), DataError);
}

TEST(Split, DeterministicPerSeed) {
  const auto pos = names("p", 30), neg = names("n", 60);
  const auto s = store_for(pos, neg);
  auto a = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 1);
  auto b = a;
  split_and_normalize(a, 42);
  split_and_normalize(b, 42);
  EXPECT_EQ(a, b);
}

// ---------------------------------------------------------------------------

TEST(PrePost, SixAuthorsGiveTwelveRows) {
  const auto pos = names("p", 8), neg = names("n", 40);
  Store pre = store_for(pos, {}, 1), post = store_for(pos, {}, 2), negs = store_for({}, neg, 3);
  pre.vectors.erase(pos[0]);
  post.vectors.erase(pos[7]);
  const auto [a, b] = pre_post_datasets(pre.lookup(), post.lookup(), negs.lookup(), pos, neg, 5);
  EXPECT_EQ(a.rows.size(), 12u);
  EXPECT_EQ(b.rows.size(), 12u);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(a.rows[i].author, b.rows[i].author);
    EXPECT_EQ(a.rows[i].features, pre.vectors.at(a.rows[i].author));
    EXPECT_EQ(b.rows[i].features, post.vectors.at(b.rows[i].author));
  }
  const auto [a2, b2] = pre_post_datasets(pre.lookup(), post.lookup(), negs.lookup(), pos, neg, 5);
  EXPECT_EQ(a, a2);
  EXPECT_EQ(b, b2);
}

TEST(PrePost, NoOverlapIsError) {
  const auto pos = names("p", 4), neg = names("n", 10);
  Store pre = store_for({pos[0], pos[1]}, {}), post = store_for({pos[2], pos[3]}, {}),
        negs = store_for({}, neg);
  EXPECT_THROW(pre_post_datasets(pre.lookup(), post.lookup(), negs.lookup(), pos, neg, 1),
               DataError);
}

// ---------------------------------------------------------------------------

TEST(DatasetIo, RoundTrip) {
  testing::TempDir dir;
  const auto pos = names("p", 10), neg = names("n", 30);
  const auto s = store_for(pos, neg);
  auto ds = build_balanced_dataset(s.lookup(), s.lookup(), pos, neg, 7);
  ds.community = "news";
  ds.bucket = "(1,10)";
  ds.scope_tag = "T-w2";
  ds.resample_seed = 123456789012345ull;
  split_and_normalize(ds, 3);
  write_dataset(dir / "d/x.csv", dir / "d/x.json", ds);
  EXPECT_EQ(read_dataset(dir / "d/x.csv", dir / "d/x.json"), ds);
}

}  // namespace
}  // namespace mindprint::cohort
