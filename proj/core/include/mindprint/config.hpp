// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_CONFIG_HPP_
#define MINDPRINT_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mindprint/cohort.hpp"
#include "mindprint/corpus.hpp"
#include "mindprint/forest.hpp"
#include "mindprint/siamese.hpp"

namespace mindprint::pipeline {

struct WindowOptions {
  bool temporal = true;
  bool cumulative = true;
  std::size_t count = 5;
  std::vector<int> exclusion_months{6, 12, 18, 24};
};

struct SiameseOptions {
  bool enabled = true;
  // One model over the pairs of all communities instead of one per
  // community.
  bool pooled = false;
  siamese::TrainOptions train;
};

// Everything a pipeline run depends on. Loaded from a JSON document whose
// top-level sections mirror the fields below; relative paths resolve
// against the directory of the config file.
struct PipelineConfig {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path dictionary;
  std::optional<std::filesystem::path> bots;
  std::filesystem::path out_dir;

  std::string target;
  std::vector<std::string> communities;
  corpus::FilterSpec filters;
  // Extra activity buckets for Study One; the any-activity bucket always
  // runs.
  std::vector<cohort::ActivityBucket> buckets;

  std::size_t n_resamples = 5;
  std::vector<forest::HyperParams> grid = forest::default_grid();
  std::size_t cv_folds = 5;
  std::size_t n_perm = 100;  // 0 skips the permutation stage
  std::size_t shap_sample_size = 700;
  bool single_model = true;
  WindowOptions windows;
  SiameseOptions siamese;

  std::uint64_t seed = 42;
  std::size_t workers = 0;  // 0 = all hardware threads

  static PipelineConfig from_json(const std::string& text,
                                  const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  // Canonical JSON of every result-affecting setting (out_dir and workers
  // excluded), with paths as given.
  std::string canonical_json() const;
  std::string hash() const;

  // Throws ConfigError for invalid values; with `need_paths` also when the
  // inputs, dictionary or bot list do not exist.
  void validate(bool need_paths) const;

  // Paths as written in the config, for the report.
  std::vector<std::string> input_labels;
  std::string dictionary_label;
  std::string bots_label;
};

// Hex SHA-256 of a byte string / a file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace mindprint::pipeline

#endif  // MINDPRINT_CONFIG_HPP_
