// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_EXPLAIN_HPP_
#define MINDPRINT_EXPLAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mindprint/forest.hpp"
#include "mindprint/matrix.hpp"

namespace mindprint::explain {

// Exact SHAP values of the forest's vote share at `x`, via the polynomial
// path algorithm for trees. Node covers are the bootstrap row counts.
// Throws DataError on a width mismatch.
std::vector<double> tree_shap(const forest::ForestModel& model, std::span<const double> x);

// Single-tree form; the leaf value is the leaf's majority vote.
std::vector<double> tree_shap(const forest::Tree& tree, std::span<const double> x,
                              std::size_t dimension);

// Cover-weighted mean output: what the attributions are measured from.
double base_value(const forest::ForestModel& model);
double base_value(const forest::Tree& tree);

struct ImportanceVector {
  std::string community;
  std::vector<double> values;  // mean |SHAP| per feature
  std::size_t n_instances = 0;
};

// Mean absolute SHAP over min(sample_size, rows) rows of `positives`,
// drawn without replacement with `seed`. Throws DataError on zero rows.
ImportanceVector importance_vector(const forest::ForestModel& model, const Matrix& positives,
                                   std::size_t sample_size, std::uint64_t seed,
                                   std::size_t workers = 1);

inline constexpr std::size_t kDefaultShapSample = 700;

// Pairwise cosine similarities, accumulated in extended precision. Throws
// DataError naming the community of any all-zero vector or on differing
// widths.
Matrix cosine_similarity_matrix(std::span<const ImportanceVector> vectors);

struct Merge {
  std::size_t a = 0;  // cluster ids: leaves 0..n-1, merge i creates n+i
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::vector<std::string> labels;
  std::vector<Merge> merges;
  std::vector<std::size_t> leaf_order;

  // Ultrametric Newick string; a node sits at half its merge height.
  std::string newick() const;
  std::string to_json() const;
};

// Average-linkage (UPGMA) agglomeration over a symmetric distance matrix.
// The closest pair merges first; ties go to the pair with the lowest ids.
// Throws DataError for fewer than 2 labels or a non-square matrix.
Dendrogram upgma(const Matrix& distance, std::span<const std::string> labels);

// 1 - similarity, elementwise.
Matrix cosine_distance(const Matrix& similarity);

struct PcaResult {
  Matrix coordinates;  // n x k
  Matrix components;   // k x D, rows are unit loadings
  std::vector<double> explained_variance;
};

// Projects centered rows onto the top-k eigenvectors of the sample
// covariance (denominator n-1). Each component is signed so that its
// largest-magnitude loading is positive. Throws DataError when n < 2 or
// k > min(n-1, D).
PcaResult pca_project(const Matrix& vectors, std::size_t k = 2);

void write_importance_csv(const std::filesystem::path& path,
                          std::span<const ImportanceVector> vectors);
std::vector<ImportanceVector> read_importance_csv(const std::filesystem::path& path);

}  // namespace mindprint::explain

#endif  // MINDPRINT_EXPLAIN_HPP_
