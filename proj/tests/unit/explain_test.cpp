// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mindprint/error.hpp"
#include "mindprint/explain.hpp"
#include "mindprint/random.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace mindprint::explain {
namespace {

using forest::ForestModel;
using forest::Tree;
using forest::TreeNode;

ForestModel wrap(std::vector<Tree> trees, std::size_t dim) {
  ForestModel m;
  m.trees = std::move(trees);
  m.dimension = dim;
  return m;
}

Tree stump(std::int32_t feature, double threshold, std::array<std::uint32_t, 2> left,
           std::array<std::uint32_t, 2> right) {
  Tree t;
  t.nodes = {TreeNode{feature, threshold, 1, 2,
                      {left[0] + right[0], left[1] + right[1]}},
             TreeNode{-1, 0, -1, -1, left}, TreeNode{-1, 0, -1, -1, right}};
  return t;
}

TEST(TreeShap, SingleLeafIsZero) {
  Tree t;
  t.nodes = {TreeNode{-1, 0, -1, -1, {1, 4}}};
  const auto phi = tree_shap(wrap({t}, 3), std::vector<double>{1, 2, 3});
  EXPECT_EQ(phi, (std::vector<double>{0, 0, 0}));
  EXPECT_DOUBLE_EQ(base_value(t), 1.0);
}

TEST(TreeShap, StumpAttributesOnlyItsFeature) {
  // Left leaf votes 0 with cover 3, right votes 1 with cover 1: base 0.25.
  const auto t = stump(1, 0.5, {3, 0}, {0, 1});
  const auto m = wrap({t}, 3);
  EXPECT_DOUBLE_EQ(base_value(m), 0.25);
  const auto right = tree_shap(m, std::vector<double>{9, 1.0, 9});
  EXPECT_DOUBLE_EQ(right[0], 0.0);
  EXPECT_DOUBLE_EQ(right[1], 0.75);
  EXPECT_DOUBLE_EQ(right[2], 0.0);
  const auto left = tree_shap(m, std::vector<double>{9, 0.0, 9});
  EXPECT_DOUBLE_EQ(left[1], -0.25);
}

TEST(TreeShap, MatchesBruteForce) {
  Rng rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t dim = 1 + rng.uniform_index(5);
    const auto m = oracle::random_small_forest(rng, 1 + rng.uniform_index(3),
                                               1 + rng.uniform_index(3), dim);
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.uniform(-1, 1);
    const auto phi = tree_shap(m, x);
    const auto want = oracle::brute_shapley(m, x);
    for (std::size_t k = 0; k < dim; ++k) ASSERT_NEAR(phi[k], want[k], 1e-12) << rep << " " << k;
  }
}

TEST(TreeShap, LocalAccuracyOnTrainedForest) {
  Rng rng(3);
  Examples ex;
  for (int i = 0; i < 120; ++i) {
    std::vector<double> row{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1),
                            rng.uniform(0, 1)};
    ex.y.push_back(row[0] + 0.3 * row[2] > 0.6);
    ex.x.append_row(row);
  }
  forest::HyperParams p;
  p.n_trees = 25;
  const auto m = forest::train_forest(ex, p, 5);
  const double base = base_value(m);
  for (std::size_t r = 0; r < ex.x.rows(); ++r) {
    const auto phi = tree_shap(m, ex.x.row(r));
    const double sum = std::accumulate(phi.begin(), phi.end(), base);
    ASSERT_NEAR(sum, m.vote_share(ex.x.row(r)), 1e-9) << r;
  }
}

TEST(TreeShap, SymmetricFeaturesGetEqualCredit) {
  // f(x) = [x0 > 0 and x1 > 0], built in both orders with equal covers.
  Tree t;
  t.nodes = {TreeNode{0, 0, 1, 2, {6, 2}},  TreeNode{-1, 0, -1, -1, {4, 0}},
             TreeNode{1, 0, 3, 4, {2, 2}},  TreeNode{-1, 0, -1, -1, {2, 0}},
             TreeNode{-1, 0, -1, -1, {0, 2}}};
  Tree u = t;
  u.nodes[0].feature = 1;
  u.nodes[2].feature = 0;
  const auto phi = tree_shap(wrap({t, u}, 2), std::vector<double>{1, 1});
  EXPECT_NEAR(phi[0], phi[1], 1e-15);
  EXPECT_GT(phi[0], 0);
}

TEST(TreeShap, WidthMismatch) {
  const auto m = wrap({stump(0, 0, {1, 0}, {0, 1})}, 2);
  EXPECT_THROW(tree_shap(m, std::vector<double>{1}), DataError);
}

// ---------------------------------------------------------------------------

TEST(Importance, MeanAbsoluteShap) {
  const auto m = wrap({stump(1, 0.5, {3, 0}, {0, 1})}, 2);
  Matrix pos;
  pos.append_row(std::vector<double>{0, 1});  // +0.75
  pos.append_row(std::vector<double>{0, 0});  // -0.25
  const auto v = importance_vector(m, pos, 700, 1);
  EXPECT_EQ(v.n_instances, 2u);
  EXPECT_DOUBLE_EQ(v.values[0], 0.0);
  EXPECT_DOUBLE_EQ(v.values[1], 0.5);
}

TEST(Importance, SampleClampedAndDeterministic) {
  Rng rng(1);
  const auto m = oracle::random_small_forest(rng, 3, 2, 3);
  Matrix pos;
  for (int i = 0; i < 50; ++i) {
    pos.append_row(std::vector<double>{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  }
  EXPECT_EQ(importance_vector(m, pos, 10, 4).n_instances, 10u);
  EXPECT_EQ(importance_vector(m, pos, 1000, 4).n_instances, 50u);
  EXPECT_EQ(importance_vector(m, pos, 10, 4, 1).values, importance_vector(m, pos, 10, 4, 3).values);
  EXPECT_THROW(importance_vector(m, Matrix(), 10, 4), DataError);
}

// ---------------------------------------------------------------------------

ImportanceVector iv(std::string name, std::vector<double> v) {
  return ImportanceVector{std::move(name), std::move(v), 1};
}

TEST(Cosine, ScaleInvarianceAndOrthogonality) {
  const std::vector<ImportanceVector> vs{iv("a", {0.1, 0.7, 0.3}), iv("b", {0.3, 2.1, 0.9}),
                                         iv("c", {0.7, -0.1, 0.0})};
  const auto s = cosine_similarity_matrix(vs);
  EXPECT_EQ(s(0, 0), 1.0);
  EXPECT_EQ(s(0, 1), 1.0);
  EXPECT_EQ(s(1, 0), s(0, 1));
  EXPECT_NEAR(s(0, 2), 0.0, 1e-15);
  EXPECT_THROW(cosine_similarity_matrix(std::vector<ImportanceVector>{iv("z", {0, 0}), iv("y", {1, 0})}),
               DataError);
  try {
    cosine_similarity_matrix(std::vector<ImportanceVector>{iv("y", {1, 0}), iv("zeroed", {0, 0})});
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("zeroed"), std::string::npos);
  }
  EXPECT_THROW(cosine_similarity_matrix(std::vector<ImportanceVector>{iv("a", {1}), iv("b", {1, 0})}),
               DataError);
}

TEST(Cosine, RandomPropertyChecks) {
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<ImportanceVector> vs;
    for (int i = 0; i < 4; ++i) {
      std::vector<double> v(5);
      for (auto& x : v) x = rng.uniform(0.01, 1);
      vs.push_back(iv("c" + std::to_string(i), v));
    }
    const auto s = cosine_similarity_matrix(vs);
    for (int i = 0; i < 4; ++i) {
      EXPECT_EQ(s(i, i), 1.0);
      for (int j = 0; j < 4; ++j) {
        EXPECT_EQ(s(i, j), s(j, i));
        EXPECT_LE(s(i, j), 1.0);
        EXPECT_GE(s(i, j), -1.0);
      }
    }
  }
}

// ---------------------------------------------------------------------------

Matrix square(std::vector<std::vector<double>> rows) {
  Matrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

TEST(Upgma, TwoLeaves) {
  const std::vector<std::string> labels{"x", "y"};
  const auto d = upgma(square({{0, 0.4}, {0.4, 0}}), labels);
  ASSERT_EQ(d.merges.size(), 1u);
  EXPECT_EQ(d.merges[0].a, 0u);
  EXPECT_EQ(d.merges[0].b, 1u);
  EXPECT_DOUBLE_EQ(d.merges[0].height, 0.4);
  EXPECT_EQ(d.newick(), "(x:0.2,y:0.2);");
}

TEST(Upgma, ThreeLeafHandComputed) {
  // d(a,b) = 1 merges first; then d({a,b},c) = (4 + 4) / 2 = 4.
  const std::vector<std::string> labels{"a", "b", "c"};
  const auto d = upgma(square({{0, 1, 4}, {1, 0, 4}, {4, 4, 0}}), labels);
  ASSERT_EQ(d.merges.size(), 2u);
  EXPECT_DOUBLE_EQ(d.merges[0].height, 1.0);
  EXPECT_EQ(d.merges[0].size, 2u);
  EXPECT_DOUBLE_EQ(d.merges[1].height, 4.0);
  EXPECT_EQ(d.merges[1].size, 3u);
  EXPECT_EQ(d.merges[1].a + d.merges[1].b, 2u + 3u);
}

TEST(Upgma, FourLeafTextbook) {
  // ab merges at 2; d(c, a) = 4 and d(c, b) = 8 average to 6.
  const std::vector<std::string> labels{"a", "b", "c", "d"};
  const auto d = upgma(square({{0, 2, 4, 10}, {2, 0, 8, 12}, {4, 8, 0, 14}, {10, 12, 14, 0}}),
                       labels);
  ASSERT_EQ(d.merges.size(), 3u);
  EXPECT_NEAR(d.merges[0].height, 2.0, 1e-12);
  EXPECT_NEAR(d.merges[1].height, 6.0, 1e-12);
  // ((a,b),c) to d: (10 + 12 + 14) / 3 = 12.
  EXPECT_NEAR(d.merges[2].height, 12.0, 1e-12);
  EXPECT_EQ(d.leaf_order.size(), 4u);
}

TEST(Upgma, LabelOrderInvariantHeights) {
  Rng rng(2);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 5;
    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = rng.uniform(0.1, 1);
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    Matrix pd(n, n);
    std::vector<std::string> labels, plabels;
    for (std::size_t i = 0; i < n; ++i) {
      labels.push_back("l" + std::to_string(i));
      plabels.push_back("l" + std::to_string(perm[i]));
      for (std::size_t j = 0; j < n; ++j) pd(i, j) = dist(perm[i], perm[j]);
    }
    const auto a = upgma(dist, labels), b = upgma(pd, plabels);
    for (std::size_t k = 0; k < n - 1; ++k) {
      EXPECT_NEAR(a.merges[k].height, b.merges[k].height, 1e-12);
      EXPECT_EQ(a.merges[k].size, b.merges[k].size);
    }
    // Heights never decrease.
    for (std::size_t k = 1; k < n - 1; ++k) EXPECT_GE(a.merges[k].height, a.merges[k - 1].height);
  }
}

TEST(Upgma, Errors) {
  const std::vector<std::string> one{"a"};
  EXPECT_THROW(upgma(square({{0}}), one), DataError);
  const std::vector<std::string> two{"a", "b"};
  EXPECT_THROW(upgma(Matrix(2, 3), two), DataError);
}

TEST(Upgma, CosineDistance) {
  const auto d = cosine_distance(square({{1, 0.25}, {0.25, 1}}));
  EXPECT_EQ(d(0, 0), 0.0);
  EXPECT_EQ(d(0, 1), 0.75);
}

// ---------------------------------------------------------------------------

TEST(Pca, PointsOnALine) {
  Matrix v;
  for (double t : {-2.0, -1.0, 0.0, 1.0, 2.0}) v.append_row(std::vector<double>{3 * t + 1, 4 * t - 2});
  const auto r = pca_project(v, 1);
  EXPECT_NEAR(r.components(0, 0), 0.6, 1e-12);
  EXPECT_NEAR(r.components(0, 1), 0.8, 1e-12);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.coordinates(i, 0), 5.0 * (i - 2.0), 1e-12);
  // Sample variance of 5 * {-2..2}: 25 * 10 / 4.
  EXPECT_NEAR(r.explained_variance[0], 62.5, 1e-9);
}

TEST(Pca, CoordinatesCentered) {
  Rng rng(7);
  Matrix v;
  for (int i = 0; i < 6; ++i) {
    v.append_row(std::vector<double>{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
  }
  const auto r = pca_project(v, 2);
  for (std::size_t c = 0; c < 2; ++c) {
    double s = 0;
    for (std::size_t i = 0; i < 6; ++i) s += r.coordinates(i, c);
    EXPECT_NEAR(s, 0.0, 1e-12);
  }
}

TEST(Pca, MatchesJacobiOnFiveByThree) {
  const auto v = square({{2.5, 2.4, 0.5},
                         {0.5, 0.7, 1.9},
                         {2.2, 2.9, 0.3},
                         {1.9, 2.2, 1.1},
                         {3.1, 3.0, 0.2}});
  std::vector<double> mean(3, 0.0);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t c = 0; c < 3; ++c) mean[c] += v(i, c) / 5;
  }
  std::vector<std::vector<double>> cov(3, std::vector<double>(3, 0.0));
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) cov[a][b] += (v(i, a) - mean[a]) * (v(i, b) - mean[b]) / 4;
    }
  }
  const auto eig = oracle::jacobi_eigen(cov);
  const auto r = pca_project(v, 2);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_NEAR(r.explained_variance[k], eig.values[k], 1e-9);
    // Same sign convention: largest-magnitude loading positive.
    auto vec = eig.vectors[k];
    std::size_t big = 0;
    for (std::size_t c = 1; c < 3; ++c) {
      if (std::abs(vec[c]) > std::abs(vec[big])) big = c;
    }
    if (vec[big] < 0) {
      for (auto& x : vec) x = -x;
    }
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(r.components(k, c), vec[c], 1e-9);
    for (std::size_t i = 0; i < 5; ++i) {
      double proj = 0;
      for (std::size_t c = 0; c < 3; ++c) proj += (v(i, c) - mean[c]) * vec[c];
      EXPECT_NEAR(r.coordinates(i, k), proj, 1e-9);
    }
  }
}

TEST(Pca, Errors) {
  Matrix one;
  one.append_row(std::vector<double>{1, 2});
  EXPECT_THROW(pca_project(one, 1), DataError);
  Matrix three = square({{1, 2}, {3, 4}, {5, 7}});
  EXPECT_THROW(pca_project(three, 3), DataError);
  EXPECT_NO_THROW(pca_project(three, 2));
}

TEST(ImportanceCsv, RoundTrip) {
  testing::TempDir dir;
  const std::vector<ImportanceVector> vs{{"news", {0.125, 1.0 / 3}, 700}, {"sports", {0, 2e-9}, 5}};
  write_importance_csv(dir / "i.csv", vs);
  const auto back = read_importance_csv(dir / "i.csv");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].community, vs[i].community);
    EXPECT_EQ(back[i].values, vs[i].values);
    EXPECT_EQ(back[i].n_instances, vs[i].n_instances);
  }
}

}  // namespace
}  // namespace mindprint::explain
