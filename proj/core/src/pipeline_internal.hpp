// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_PIPELINE_INTERNAL_HPP_
#define MINDPRINT_PIPELINE_INTERNAL_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mindprint/cohort.hpp"
#include "mindprint/forest.hpp"
#include "mindprint/lexicon.hpp"
#include "mindprint/pipeline.hpp"

namespace mindprint::pipeline::detail {

namespace fs = std::filesystem;

// Artifact locations relative to out_dir.
inline const fs::path kIndexCsv = "ingest/index.csv";
inline const fs::path kFirstTargetCsv = "ingest/first_target.csv";
inline const fs::path kIngestSummary = "ingest/summary.json";
inline const fs::path kEmbeddingsCsv = "embeddings/embeddings.csv";
inline const fs::path kEmbeddingsJson = "embeddings/embeddings.json";
inline const fs::path kDatasetIndex = "datasets/index.csv";
inline const fs::path kDatasetSkipped = "datasets/skipped.csv";
inline const fs::path kTrainCsv = "results/train.csv";
inline const fs::path kSingleModelCsv = "results/single_model.csv";
inline const fs::path kPermtestCsv = "results/permtest.csv";
inline const fs::path kImportanceCsv = "shap/importance.csv";
inline const fs::path kImportanceBySeedCsv = "shap/importance_by_seed.csv";
inline const fs::path kSingleShapCsv = "shap/single_model_shap.csv";
inline const fs::path kSimilarityCsv = "cluster/similarity.csv";
inline const fs::path kDendrogramNwk = "cluster/dendrogram.nwk";
inline const fs::path kDendrogramJson = "cluster/dendrogram.json";
inline const fs::path kPcaCsv = "cluster/pca.csv";
inline const fs::path kPcaSingleCsv = "cluster/pca_single_model.csv";
inline const fs::path kPrepostCsv = "results/prepost.csv";
inline const fs::path kPrepostSummary = "results/prepost_summary.json";
inline const fs::path kWindowsCsv = "results/windows.csv";
inline const fs::path kWindowsSummary = "results/windows_summary.json";
inline const fs::path kSiameseCsv = "results/siamese.csv";
inline const fs::path kManifest = "manifest.json";

inline constexpr const char* kAnyBucket = "any";

// Throws DataError naming `stage` when out_dir/relative is missing.
void require(const PipelineConfig& config, const fs::path& relative, const char* stage);

void emit(const Log& log, const std::string& line);

std::string sanitize(const std::string& name);

struct BucketRef {
  std::string slug;   // "any", "b1", ...
  std::string label;  // interval notation
  cohort::ActivityBucket bucket;
};
std::vector<BucketRef> bucket_refs(const PipelineConfig& config);

// Scope tags produced by the featurize stage for positives, in output
// order (after "all", "pre", "post").
std::vector<std::string> window_scopes(const PipelineConfig& config);
std::vector<std::string> exclusion_scopes(const PipelineConfig& config);
inline const std::vector<std::string> kHalfScopes{"B1", "B2", "A1", "A2"};

struct DatasetEntry {
  std::string community;
  std::string bucket;  // slug
  std::string bucket_label;
  std::string scope;
  std::size_t resample = 0;
  std::uint64_t seed = 0;
  std::size_t rows = 0;
  fs::path csv;  // relative to out_dir
  fs::path manifest;
};
std::vector<DatasetEntry> read_dataset_index(const PipelineConfig& config);
cohort::LabeledDataset load_dataset(const PipelineConfig& config, const DatasetEntry& entry);

// Normalized train/test matrices from a dataset's recorded split.
struct PreparedData {
  Examples train;
  Examples test;
  cohort::Normalizer normalizer;
};
PreparedData prepare(const cohort::LabeledDataset& dataset);

struct FitResult {
  forest::GridResult grid;
  forest::ForestModel model;
  double cv_accuracy = 0.0;
  double accuracy = 0.0;
};
// Grid search (skipped for a one-point grid), final fit and test accuracy.
FitResult fit_and_score(const PreparedData& data, const PipelineConfig& config,
                        std::uint64_t seed, const std::vector<std::string>& feature_names);

std::vector<std::string> feature_names(const PipelineConfig& config);

fs::path model_path(const DatasetEntry& entry);

// Minimal CSV writer over rows of strings.
void write_table(const fs::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

}  // namespace mindprint::pipeline::detail

#endif  // MINDPRINT_PIPELINE_INTERNAL_HPP_
