// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_COHORT_HPP_
#define MINDPRINT_COHORT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mindprint/corpus.hpp"
#include "mindprint/matrix.hpp"

namespace mindprint::cohort {

// Interval over target-community comment counts.
struct ActivityBucket {
  std::int64_t lower = 0;
  bool lower_inclusive = false;
  std::optional<std::int64_t> upper;  // nullopt = unbounded
  bool upper_inclusive = false;

  bool contains(std::int64_t count) const;
  // Interval notation, e.g. "(1,10)" or "[100,inf)".
  std::string label() const;

  // Parses interval notation; "inf" marks an open upper end. Throws
  // ConfigError on malformed input or an empty interval.
  static ActivityBucket parse(std::string_view text);
  // (0,1], (1,10), [10,100), [100,inf)
  static std::vector<ActivityBucket> canonical();
  // (0,inf): at least one target comment.
  static ActivityBucket any_activity();

  bool operator==(const ActivityBucket&) const = default;
};

struct Pools {
  std::vector<std::string> positives;  // sorted
  std::vector<std::string> negatives;  // sorted
};

// Splits `eligible` into positives (target-community count inside `bucket`,
// default any_activity()) and negatives (no target-community comment in the
// index). Authors outside both sets, e.g. positives of another bucket, are
// left out. Throws DataError("no cohort members") if there are no positives.
Pools label_pools(const corpus::ActivityIndex& index, std::string_view community,
                  const corpus::AuthorSet& eligible,
                  const std::optional<ActivityBucket>& bucket = std::nullopt);

enum class Split : std::uint8_t { kTrain, kTest };

struct LabeledRow {
  std::string author;
  std::vector<double> features;
  std::uint8_t label = 0;
  Split split = Split::kTrain;

  bool operator==(const LabeledRow&) const = default;
};

struct LabeledDataset {
  std::string community;
  std::string scope_tag = "all";
  std::string bucket;
  std::uint64_t resample_seed = 0;
  std::vector<LabeledRow> rows;
  // reason -> number of authors dropped for it
  std::map<std::string, std::size_t> drops;

  std::size_t dimension() const { return rows.empty() ? 0 : rows.front().features.size(); }
  std::size_t count(std::uint8_t label) const;
  // Rows of one split as a feature matrix plus labels, in row order.
  Examples examples(Split split) const;
  std::vector<std::string> authors(Split split) const;

  bool operator==(const LabeledDataset&) const = default;
};

// Returns the embedding of an author, or nullptr if there is none.
using EmbeddingLookup = std::function<const std::vector<double>*(const std::string&)>;

// All positives that have an embedding, plus as many negatives drawn
// uniformly without replacement (seeded) from those negatives that have
// one. Rows are positives in input order followed by the sampled negatives.
// Authors without an embedding are counted in `drops`. Throws DataError if
// the negative pool is smaller than the positive one, or if a name appears
// in both pools.
LabeledDataset build_balanced_dataset(const EmbeddingLookup& positive_embeddings,
                                      const EmbeddingLookup& negative_embeddings,
                                      std::span<const std::string> positives,
                                      std::span<const std::string> negatives,
                                      std::uint64_t seed);

// z-score parameters fitted on training rows.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // zero deviations are stored as 1

  static Normalizer fit(const Matrix& x);
  void apply(Matrix& x) const;
  std::vector<double> apply(std::span<const double> row) const;

  bool operator==(const Normalizer&) const = default;
};

struct SplitData {
  Examples train;
  Examples test;
  Normalizer normalizer;
};

inline constexpr double kTrainFraction = 0.8;
inline constexpr std::size_t kMinRowsPerClass = 5;

// Stratified split: within each class round(0.8 * n_class) rows, chosen by
// a seeded shuffle, go to train. Marks each row's split in `dataset` and
// returns normalized matrices (normalizer fitted on train only). Throws
// DataError("too small to split") when a class has fewer than 5 rows.
SplitData split_and_normalize(LabeledDataset& dataset, std::uint64_t seed);

// Study Two: two balanced datasets over the positives that have both a
// "pre" and a "post" embedding. Negatives are drawn independently for each
// dataset, with seeds derived from `seed`. Throws DataError if no positive
// has both scopes.
std::pair<LabeledDataset, LabeledDataset> pre_post_datasets(
    const EmbeddingLookup& pre_embeddings, const EmbeddingLookup& post_embeddings,
    const EmbeddingLookup& negative_embeddings, std::span<const std::string> positives,
    std::span<const std::string> negatives, std::uint64_t seed);

// CSV "author,label,split,f_1..f_D" plus a JSON manifest with community,
// bucket, seed, scope_tag and drop counts.
void write_dataset(const std::filesystem::path& csv, const std::filesystem::path& manifest,
                   const LabeledDataset& dataset);
LabeledDataset read_dataset(const std::filesystem::path& csv,
                            const std::filesystem::path& manifest);

}  // namespace mindprint::cohort

#endif  // MINDPRINT_COHORT_HPP_
