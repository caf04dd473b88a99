// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

// Study orchestration, the report manifest and its verification.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"
#include "pipeline_internal.hpp"

#ifndef MINDPRINT_VERSION
#define MINDPRINT_VERSION "0.0.0"
#endif

namespace mindprint::pipeline {

using json = nlohmann::ordered_json;
using namespace detail;

namespace {

constexpr const char* kFormat = "mindprint-report";

bool has(const PipelineConfig& config, const fs::path& rel) {
  return fs::exists(config.out_dir / rel);
}

// Runs `stage` unless `output` already exists.
void ensure(const PipelineConfig& config, const Log& log, const fs::path& output,
            void (*stage)(const PipelineConfig&, const Log&), const char* name) {
  if (has(config, output)) {
    emit(log, std::string(name) + ": outputs present, skipping");
    return;
  }
  stage(config, log);
}

struct StageInfo {
  const char* name;
  fs::path output;
};

std::vector<StageInfo> stage_table() {
  return {{"ingest", kIndexCsv},     {"featurize", kEmbeddingsCsv}, {"dataset", kDatasetIndex},
          {"train", kTrainCsv},      {"permtest", kPermtestCsv},    {"shap", kImportanceCsv},
          {"cluster", kSimilarityCsv}, {"prepost", kPrepostCsv},    {"windows", kWindowsCsv},
          {"siamese", kSiameseCsv}};
}

bool explain_rows_below_two(const fs::path& importance_csv) {
  return read_csv_file(importance_csv).rows.size() < 2;
}

bool is_hex64(const std::string& s) {
  return s.size() == 64 &&
         std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

std::string bundle_hash(const json& files) {
  std::string lines;
  for (const auto& f : files) {
    lines += f.at("path").get<std::string>() + "\t" + f.at("sha256").get<std::string>() + "\n";
  }
  return sha256_hex(lines);
}

std::vector<fs::path> bundle_files(const fs::path& out_dir) {
  std::vector<fs::path> out;
  if (!fs::exists(out_dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(out_dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), out_dir);
    if (rel == kManifest) continue;
    out.push_back(rel);
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
  return out;
}

// Column values of a CSV as numbers, skipping blanks.
std::vector<double> numeric_column(const CsvTable& t, const std::string& name,
                                   const std::function<bool(const std::vector<std::string>&)>& keep) {
  std::vector<double> out;
  const auto c = t.column(name);
  for (const auto& row : t.rows) {
    if (keep(row) && !row[c].empty()) out.push_back(parse_double(row[c]));
  }
  return out;
}

json summarize(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  auto s = v;
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  const double med = n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  return {{"n", n}, {"median", med}, {"min", s.front()}, {"max", s.back()}};
}

json results_summary(const PipelineConfig& config, std::vector<std::string>& gaps) {
  json s = json::object();
  const auto& out = config.out_dir;
  if (has(config, kTrainCsv)) {
    const auto t = read_csv_file(out / kTrainCsv);
    const auto b = t.column("bucket"), c = t.column("community"), err = t.column("error");
    json per = json::object();
    for (const auto& name : config.communities) {
      per[name] = summarize(numeric_column(t, "accuracy", [&](const auto& r) {
        return r[c] == name && r[b] == kAnyBucket;
      }));
    }
    s["study_one"]["accuracy"] = per;
    s["study_one"]["accuracy_all"] =
        summarize(numeric_column(t, "accuracy", [&](const auto& r) { return r[b] == kAnyBucket; }));
    for (const auto& row : t.rows) {
      if (!row[err].empty()) gaps.push_back("train " + row[c] + "/" + row[b] + "/r" + row[4] + ": " + row[err]);
    }
  }
  if (has(config, kSingleModelCsv)) {
    const auto t = read_csv_file(out / kSingleModelCsv);
    s["study_one"]["single_model_accuracy"] =
        summarize(numeric_column(t, "single_accuracy", [](const auto&) { return true; }));
    s["study_one"]["single_model_delta_pp"] =
        summarize(numeric_column(t, "delta_pp", [](const auto&) { return true; }));
  }
  if (has(config, kPermtestCsv)) {
    const auto t = read_csv_file(out / kPermtestCsv);
    s["study_one"]["permutation_p"] =
        summarize(numeric_column(t, "p_value", [](const auto&) { return true; }));
  }
  if (has(config, kDendrogramNwk)) {
    auto nwk = read_text_file(out / kDendrogramNwk);
    while (!nwk.empty() && nwk.back() == '\n') nwk.pop_back();
    s["study_one"]["dendrogram"] = nwk;
  }
  if (has(config, kPrepostSummary)) {
    s["study_two"]["prepost"] = json::parse(read_text_file(out / kPrepostSummary));
  }
  if (has(config, kWindowsSummary)) {
    s["study_two"]["windows"] = json::parse(read_text_file(out / kWindowsSummary));
  }
  if (has(config, kSiameseCsv)) {
    const auto t = read_csv_file(out / kSiameseCsv);
    s["study_two"]["siamese_accuracy"] =
        summarize(numeric_column(t, "accuracy", [](const auto&) { return true; }));
  }
  if (has(config, kDatasetSkipped)) {
    const auto t = read_csv_file(out / kDatasetSkipped);
    for (const auto& row : t.rows) {
      gaps.push_back("dataset " + row[0] + "/" + row[1] + "/" + row[2] + "/r" + row[3] + ": " + row[4]);
    }
  }
  return s;
}

}  // namespace

void run_study_one(const PipelineConfig& config, const Log& log) {
  ensure(config, log, kIndexCsv, run_ingest, "ingest");
  ensure(config, log, kEmbeddingsCsv, run_featurize, "featurize");
  ensure(config, log, kDatasetIndex, run_dataset, "dataset");
  ensure(config, log, kTrainCsv, run_train, "train");
  if (config.n_perm > 0) ensure(config, log, kPermtestCsv, run_permtest, "permtest");
  ensure(config, log, kImportanceCsv, run_shap, "shap");
  ensure(config, log, kSimilarityCsv, run_cluster, "cluster");
}

void run_study_two(const PipelineConfig& config, const Log& log) {
  ensure(config, log, kIndexCsv, run_ingest, "ingest");
  ensure(config, log, kEmbeddingsCsv, run_featurize, "featurize");
  ensure(config, log, kDatasetIndex, run_dataset, "dataset");
  ensure(config, log, kPrepostCsv, run_prepost, "prepost");
  ensure(config, log, kWindowsCsv, run_windows, "windows");
  if (config.siamese.enabled) ensure(config, log, kSiameseCsv, run_siamese, "siamese");
}

std::string run_report(const PipelineConfig& config, const Log& log) {
  if (!fs::exists(config.out_dir)) {
    throw DataError("output directory " + config.out_dir.string() +
                    " does not exist; run `mindprint ingest` first");
  }
  json m;
  m["format"] = kFormat;
  m["version"] = MINDPRINT_VERSION;
  m["config_hash"] = config.hash();
  m["config"] = json::parse(config.canonical_json());
  m["seeds"] = {{"master", config.seed},
                {"derivation", "master -> stage -> community -> key -> replica"}};

  std::vector<std::string> gaps;
  json stages = json::object();
  for (const auto& st : stage_table()) {
    std::string status = has(config, st.output) ? "complete" : "missing";
    if (status == "missing") {
      const std::string n = st.name;
      if (n == "permtest" && config.n_perm == 0) status = "disabled";
      if (n == "siamese" && !config.siamese.enabled) status = "disabled";
      if (n == "cluster" && has(config, kImportanceCsv) &&
          explain_rows_below_two(config.out_dir / kImportanceCsv)) {
        status = "skipped";
      }
    }
    if (status == "missing") gaps.push_back(std::string(st.name) + ": no output; run `mindprint " + st.name + "`");
    if (status == "skipped") gaps.push_back(std::string(st.name) + ": fewer than 2 communities");
    stages[st.name] = status;
  }
  m["stages"] = stages;
  m["summary"] = results_summary(config, gaps);
  m["gaps"] = gaps;

  json files = json::array();
  for (const auto& rel : bundle_files(config.out_dir)) {
    const auto abs = config.out_dir / rel;
    files.push_back({{"path", rel.generic_string()},
                     {"sha256", sha256_file(abs)},
                     {"bytes", fs::file_size(abs)}});
  }
  m["files"] = files;
  const auto bundle = bundle_hash(files);
  m["bundle_hash"] = bundle;
  write_text_file(config.out_dir / kManifest, m.dump(2) + "\n");
  for (const auto& g : gaps) emit(log, "gap: " + g);
  emit(log, "report: " + std::to_string(files.size()) + " files, bundle " + bundle);
  return bundle;
}

std::vector<std::string> validate_manifest(const std::string& manifest_json) {
  std::vector<std::string> v;
  json m;
  try {
    m = json::parse(manifest_json);
  } catch (const json::exception& e) {
    return {std::string("not valid JSON: ") + e.what()};
  }
  if (!m.is_object()) return {"manifest is not an object"};
  auto need = [&](const char* key, auto pred, const char* what) {
    if (!m.contains(key)) {
      v.push_back(std::string("missing '") + key + "'");
      return false;
    }
    if (!pred(m[key])) {
      v.push_back(std::string("'") + key + "' must be " + what);
      return false;
    }
    return true;
  };
  const auto is_str = [](const json& j) { return j.is_string(); };
  const auto is_hash = [](const json& j) { return j.is_string() && is_hex64(j.get<std::string>()); };
  if (need("format", is_str, "a string") && m["format"] != kFormat) {
    v.push_back("'format' must be \"" + std::string(kFormat) + "\"");
  }
  need("version", is_str, "a string");
  need("config_hash", is_hash, "a lowercase hex SHA-256");
  need("config", [](const json& j) { return j.is_object(); }, "an object");
  need("seeds", [](const json& j) { return j.is_object() && j.contains("master") && j["master"].is_number_unsigned(); },
       "an object with an unsigned 'master'");
  if (need("stages", [](const json& j) { return j.is_object(); }, "an object")) {
    static const std::set<std::string> ok{"complete", "missing", "disabled", "skipped"};
    for (const auto& [k, s] : m["stages"].items()) {
      if (!s.is_string() || !ok.count(s.get<std::string>())) v.push_back("stage '" + k + "' has an invalid status");
    }
  }
  if (need("gaps", [](const json& j) { return j.is_array(); }, "an array")) {
    for (const auto& g : m["gaps"]) {
      if (!g.is_string()) v.push_back("'gaps' entries must be strings");
    }
  }
  need("summary", [](const json& j) { return j.is_object(); }, "an object");
  const bool files_ok = need("files", [](const json& j) { return j.is_array(); }, "an array");
  if (files_ok) {
    std::string prev;
    for (const auto& f : m["files"]) {
      if (!f.is_object() || !f.contains("path") || !f["path"].is_string() || !f.contains("sha256") ||
          !is_hash(f["sha256"]) || !f.contains("bytes") || !f["bytes"].is_number_unsigned()) {
        v.push_back("malformed file entry " + f.dump());
        continue;
      }
      const auto p = f["path"].get<std::string>();
      if (p.empty() || p[0] == '/' || p.find("..") != std::string::npos) {
        v.push_back("file path '" + p + "' is not a plain relative path");
      }
      if (!prev.empty() && p <= prev) v.push_back("file entries are not sorted and unique at '" + p + "'");
      prev = p;
    }
  }
  if (need("bundle_hash", is_hash, "a lowercase hex SHA-256") && files_ok && v.empty() &&
      bundle_hash(m["files"]) != m["bundle_hash"].get<std::string>()) {
    v.push_back("'bundle_hash' does not match the file list");
  }
  return v;
}

VerifyResult verify_report(const fs::path& out_dir) {
  VerifyResult r;
  const auto path = out_dir / kManifest;
  if (!fs::exists(path)) {
    throw DataError("no manifest.json in " + out_dir.string() + "; run `mindprint report` first");
  }
  const auto text = read_text_file(path);
  r.problems = validate_manifest(text);
  if (!r.problems.empty()) {
    r.ok = false;
    return r;
  }
  const auto m = json::parse(text);
  std::set<std::string> listed;
  for (const auto& f : m["files"]) {
    const auto rel = f["path"].get<std::string>();
    listed.insert(rel);
    const auto abs = out_dir / rel;
    if (!fs::exists(abs)) {
      r.problems.push_back("missing: " + rel);
    } else if (sha256_file(abs) != f["sha256"].get<std::string>()) {
      r.problems.push_back("altered: " + rel);
    }
  }
  for (const auto& rel : bundle_files(out_dir)) {
    if (!listed.count(rel.generic_string())) r.problems.push_back("unlisted: " + rel.generic_string());
  }
  r.ok = r.problems.empty();
  return r;
}

}  // namespace mindprint::pipeline
