// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_PIPELINE_HPP_
#define MINDPRINT_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mindprint/config.hpp"

namespace mindprint::pipeline {

// Receives progress and warning lines.
using Log = std::function<void(std::string_view)>;

// Stages. Each reads the artifacts of earlier stages from config.out_dir
// and throws DataError naming the subcommand to run first when one is
// missing.
//
//   ingest     ingest/{index.csv,first_target.csv,summary.json}
//   featurize  embeddings/{embeddings.csv,embeddings.json,summary.json}
//   dataset    datasets/index.csv, datasets/skipped.csv, one CSV + JSON per dataset
//   train      results/train.csv, results/single_model.csv, models/
//   permtest   results/permtest.csv
//   shap       shap/{importance.csv,importance_by_seed.csv,single_model_shap.csv}
//   cluster    cluster/{similarity.csv,dendrogram.nwk,dendrogram.json,pca.csv,...}
//   prepost    results/prepost.csv, results/prepost_summary.json
//   windows    results/windows.csv, results/windows_summary.json
//   siamese    results/siamese.csv, models/siamese/
//   report     manifest.json
void run_ingest(const PipelineConfig& config, const Log& log = {});
void run_featurize(const PipelineConfig& config, const Log& log = {});
void run_dataset(const PipelineConfig& config, const Log& log = {});
void run_train(const PipelineConfig& config, const Log& log = {});
void run_permtest(const PipelineConfig& config, const Log& log = {});
void run_shap(const PipelineConfig& config, const Log& log = {});
void run_cluster(const PipelineConfig& config, const Log& log = {});
void run_prepost(const PipelineConfig& config, const Log& log = {});
void run_windows(const PipelineConfig& config, const Log& log = {});
void run_siamese(const PipelineConfig& config, const Log& log = {});

// Study One: ingest through cluster, skipping stages whose outputs exist.
void run_study_one(const PipelineConfig& config, const Log& log = {});
// Study Two: prepost, windows and (when enabled) siamese, producing any
// missing prerequisites first.
void run_study_two(const PipelineConfig& config, const Log& log = {});

// Writes manifest.json: config hash, seeds, stage status, gaps, a results
// summary and the SHA-256 of every file in the bundle. Returns the bundle
// hash.
std::string run_report(const PipelineConfig& config, const Log& log = {});

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> problems;  // missing or altered files
};

// Recomputes every hash listed in out_dir/manifest.json.
VerifyResult verify_report(const std::filesystem::path& out_dir);

// Structural check of a manifest document; returns the violations.
std::vector<std::string> validate_manifest(const std::string& manifest_json);

// Seed of one task: master -> stage -> community -> key -> replica.
std::uint64_t task_seed(std::uint64_t master, std::string_view stage, std::string_view community,
                        std::string_view key, std::uint64_t replica);

}  // namespace mindprint::pipeline

#endif  // MINDPRINT_PIPELINE_HPP_
