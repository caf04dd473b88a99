// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <deque>

#include "mindprint/error.hpp"
#include "mindprint/random.hpp"
#include "mindprint/trajectory.hpp"

namespace mindprint::trajectory {
namespace {

TEST(Position, Temporal) {
  EXPECT_DOUBLE_EQ(temporal_position(125, 100, 200), 0.25);
  EXPECT_DOUBLE_EQ(temporal_position(100, 100, 200), 0.0);
  EXPECT_DOUBLE_EQ(temporal_position(200, 100, 200), 1.0);
  EXPECT_THROW(temporal_position(150, 200, 200), DataError);
  EXPECT_THROW(temporal_position(99, 100, 200), DataError);
  EXPECT_THROW(temporal_position(201, 100, 200), DataError);
}

TEST(Position, Cumulative) {
  EXPECT_DOUBLE_EQ(cumulative_position(5, 10), 0.5);
  EXPECT_DOUBLE_EQ(cumulative_position(0, 1), 0.0);
  EXPECT_THROW(cumulative_position(0, 0), DataError);
  EXPECT_THROW(cumulative_position(3, 3), DataError);
}

TEST(WindowSpec, Boundaries) {
  const WindowSpec spec;
  EXPECT_EQ(spec.size(), 5u);
  EXPECT_EQ(spec.window_of(0.0), 0u);
  EXPECT_EQ(spec.window_of(0.2), 1u);
  EXPECT_EQ(spec.window_of(0.4), 2u);
  EXPECT_EQ(spec.window_of(0.39999), 1u);
  EXPECT_EQ(spec.window_of(1.0), 4u);
  EXPECT_EQ(spec.tag(2), "T-w3");
  EXPECT_EQ(WindowSpec::even(WindowKind::kCumulative, 5).tag(0), "N-w1");
  EXPECT_THROW(spec.window_of(1.01), DataError);
  EXPECT_THROW(spec.window_of(-0.01), DataError);
  WindowSpec bad;
  bad.edges = {0.0, 0.5, 0.5, 1.0};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad.edges = {0.1, 1.0};
  EXPECT_THROW(bad.validate(), ConfigError);
  const auto four = WindowSpec::even(WindowKind::kTemporal, 4);
  EXPECT_EQ(four.edges, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
}

// ---------------------------------------------------------------------------

struct UserFixture {
  std::deque<lexicon::FeatureVector> storage;
  std::vector<UserComment> comments;

  void add(Timestamp ts, std::vector<double> v) {
    storage.push_back(lexicon::FeatureVector{std::move(v), 10});
    comments.push_back(UserComment{ts, "c" + std::to_string(comments.size()), &storage.back()});
  }
};

TEST(Scopes, SplitAtTau) {
  UserFixture u;
  u.add(300, {1});
  u.add(100, {2});
  u.add(200, {3});  // at tau: post
  u.add(250, {4});
  const auto pre = pre_scope(u.comments, 200);
  const auto post = post_scope(u.comments, 200);
  ASSERT_EQ(pre.size(), 1u);
  EXPECT_EQ(pre[0].ts, 100);
  ASSERT_EQ(post.size(), 3u);
  EXPECT_EQ(post[0].ts, 200);
  EXPECT_EQ(post[2].ts, 300);
}

TEST(Positions, TemporalAndCumulative) {
  UserFixture u;
  for (Timestamp t : {0, 10, 50, 80, 100, 120}) u.add(t, {1});
  const auto t = activity_positions(u.comments, 100, WindowKind::kTemporal);
  EXPECT_EQ(t, (std::vector<double>{0.0, 0.1, 0.5, 0.8}));
  const auto n = activity_positions(u.comments, 100, WindowKind::kCumulative);
  EXPECT_EQ(n, (std::vector<double>{0.0, 0.25, 0.5, 0.75}));
  const auto w = window_assignments(u.comments, 100, WindowSpec{});
  EXPECT_EQ(w, (std::vector<std::size_t>{0, 0, 2, 4}));
  EXPECT_TRUE(activity_positions(u.comments, 0, WindowKind::kTemporal).empty());
}

TEST(Windows, PartitionAndReconstruct) {
  Rng rng(12);
  for (int user = 0; user < 200; ++user) {
    UserFixture u;
    const std::size_t n = 1 + rng.uniform_index(60);
    const Timestamp tau = 1'000'000;
    for (std::size_t i = 0; i < n; ++i) {
      const Timestamp ts = static_cast<Timestamp>(rng.uniform_index(1'200'000));
      u.add(ts, {rng.uniform(0, 100), rng.uniform(0, 20), rng.uniform(0, 5)});
    }
    const auto pre = pre_scope(u.comments, tau);
    for (auto kind : {WindowKind::kTemporal, WindowKind::kCumulative}) {
      const auto spec = WindowSpec::even(kind, 5);
      const auto windows = window_embeddings(u.comments, tau, spec, "u", "c");
      ASSERT_EQ(windows.size(), 5u);
      const auto full = scope_embedding(pre, "u", "c", "pre");
      if (pre.empty()) {
        EXPECT_FALSE(full.has_value());
        for (const auto& w : windows) EXPECT_FALSE(w.has_value());
        continue;
      }
      std::size_t total = 0;
      std::vector<double> weighted(3, 0.0);
      for (std::size_t k = 0; k < windows.size(); ++k) {
        if (!windows[k]) continue;
        EXPECT_EQ(windows[k]->scope_tag, spec.tag(k));
        total += windows[k]->n_comments;
        for (std::size_t c = 0; c < 3; ++c) weighted[c] += windows[k]->n_comments * windows[k]->vector[c];
      }
      ASSERT_EQ(total, pre.size());
      for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_NEAR(weighted[c] / total, full->vector[c], 1e-9 * std::max(1.0, full->vector[c]));
      }
    }
  }
}

TEST(Windows, RepeatedTimestampsShareWindow) {
  UserFixture u;
  u.add(50, {1});
  u.add(50, {3});
  u.add(90, {9});
  const auto w = window_embeddings(u.comments, 100, WindowSpec{}, "u", "c");
  ASSERT_TRUE(w[0].has_value());
  EXPECT_EQ(w[0]->n_comments, 2u);
  EXPECT_DOUBLE_EQ(w[0]->vector[0], 2.0);
  ASSERT_TRUE(w[4].has_value());
  EXPECT_DOUBLE_EQ(w[4]->vector[0], 9.0);
}

TEST(Exclusion, StrictlyBeforeCutoff) {
  UserFixture u;
  const Timestamp tau = 100 * kSecondsPerMonth;
  const Timestamp cut = tau - 6 * kSecondsPerMonth;
  u.add(cut - 1, {4});
  u.add(cut, {100});
  u.add(tau - 1, {100});
  const auto e = exclusion_embedding(u.comments, 6, tau, "u", "c");
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(e->n_comments, 1u);
  EXPECT_EQ(e->vector[0], 4.0);
  EXPECT_EQ(e->scope_tag, "excl-6m");
  EXPECT_FALSE(exclusion_embedding(u.comments, 120, tau, "u", "c").has_value());
}

TEST(Windows, AffineTimeInvariance) {
  Rng rng(4);
  UserFixture u;
  UserFixture v;
  for (int i = 0; i < 40; ++i) {
    const Timestamp t = static_cast<Timestamp>(rng.uniform_index(1000));
    const std::vector<double> f{rng.uniform(0, 1)};
    u.add(t, f);
    v.add(7 * t + 12345, f);
  }
  EXPECT_EQ(window_assignments(u.comments, 900, WindowSpec{}),
            window_assignments(v.comments, 7 * 900 + 12345, WindowSpec{}));
}

TEST(Trend, IncreasingAccuracies) {
  const std::vector<double> acc{0.5, 0.55, 0.6, 0.7, 0.8};
  const auto r = trend_over_windows(acc);
  EXPECT_DOUBLE_EQ(r.statistic, 10.0);
  EXPECT_EQ(r.method, stats::Method::kMannKendall);
  EXPECT_LT(r.p_value, 0.05);
}

}  // namespace
}  // namespace mindprint::trajectory
