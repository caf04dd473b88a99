// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_FOREST_HPP_
#define MINDPRINT_FOREST_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mindprint/matrix.hpp"

namespace mindprint::forest {

struct HyperParams {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;  // nullopt = unlimited
  std::size_t min_samples_leaf = 1;
  std::optional<std::size_t> features_per_split;  // nullopt = floor(sqrt(D))

  // Throws ConfigError if n_trees, min_samples_leaf or features_per_split
  // is zero, or max_depth is zero.
  void validate() const;
  std::size_t resolved_features(std::size_t dimension) const;
  // e.g. "trees=100,depth=none,leaf=1,features=sqrt"
  std::string label() const;

  bool operator==(const HyperParams&) const = default;
};

// n_trees {100, 300} x max_depth {unlimited, 10, 20} x min_samples_leaf
// {1, 5}, features_per_split sqrt.
std::vector<HyperParams> default_grid();

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::array<std::uint32_t, 2> count{};  // bootstrap rows per class

  bool is_leaf() const { return feature < 0; }
  std::uint32_t cover() const { return count[0] + count[1]; }
  // Leaf vote; ties go to 0.
  std::uint8_t majority() const { return count[1] > count[0] ? 1 : 0; }

  bool operator==(const TreeNode&) const = default;
};

// Nodes in preorder; node 0 is the root.
struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const;
  std::uint8_t predict(std::span<const double> x) const { return leaf_for(x).majority(); }
  std::size_t depth() const;

  bool operator==(const Tree&) const = default;
};

class ForestModel {
 public:
  std::vector<Tree> trees;
  HyperParams params;
  std::uint64_t seed = 0;
  std::size_t dimension = 0;
  std::vector<std::string> feature_names;  // optional, length D when set

  // Majority of tree votes; a tie goes to 0. Throws DataError on a width
  // mismatch.
  std::uint8_t predict(std::span<const double> x) const;
  std::vector<std::uint8_t> predict(const Matrix& x) const;
  // Fraction of trees voting 1.
  double vote_share(std::span<const double> x) const;

  std::string to_json() const;
  static ForestModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static ForestModel load(const std::filesystem::path& path);

  bool operator==(const ForestModel&) const = default;
};

// Bootstrap-aggregated Gini trees. Each tree draws its own bootstrap sample
// and feature subsets from derive_seed(seed, tree_index), so the model does
// not depend on `workers`. Throws DataError with fewer than 2 rows or a
// single class.
ForestModel train_forest(const Examples& train, const HyperParams& params,
                         std::uint64_t seed, std::size_t workers = 1);

double evaluate(const ForestModel& model, const Examples& data);

struct GridResult {
  std::size_t best_index = 0;
  HyperParams best;
  std::vector<double> mean_accuracy;  // per grid point, NaN if no valid fold
};

// k-fold stratified cross-validation over `grid`. Folds whose training part
// has a single class are skipped. Ties go to the earlier grid point.
GridResult grid_search(const Examples& train, std::span<const HyperParams> grid,
                       std::size_t k, std::uint64_t seed, std::size_t workers = 1);

struct PermutationReport {
  double observed_accuracy = 0.0;
  std::vector<double> permuted_accuracies;
  std::size_t exceed_count = 0;  // permuted >= observed
  double p_value = 1.0;          // (C + 1) / (n_perm + 1)
};

// Observed accuracy from a model trained with `seed`; replica i shuffles the
// training labels and retrains with derive_seed(seed, i + 1). Test data are
// never touched. Throws ConfigError if n_perm < 1.
PermutationReport permutation_test(const Examples& train, const Examples& test,
                                   const HyperParams& params, std::size_t n_perm,
                                   std::uint64_t seed, std::size_t workers = 1);

}  // namespace mindprint::forest

#endif  // MINDPRINT_FOREST_HPP_
