// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include "mindprint/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"

namespace mindprint::pipeline {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

forest::HyperParams params_from(const json& j) {
  reject_unknown(j, {"n_trees", "max_depth", "min_samples_leaf", "features_per_split"},
                 "grid entry");
  forest::HyperParams hp;
  hp.n_trees = j.value("n_trees", hp.n_trees);
  if (j.contains("max_depth") && !j["max_depth"].is_null()) {
    hp.max_depth = j["max_depth"].get<std::size_t>();
  }
  hp.min_samples_leaf = j.value("min_samples_leaf", hp.min_samples_leaf);
  if (j.contains("features_per_split")) {
    const auto& f = j["features_per_split"];
    if (f.is_number_unsigned()) {
      hp.features_per_split = f.get<std::size_t>();
    } else if (!(f.is_string() && f.get<std::string>() == "sqrt")) {
      throw ConfigError("features_per_split must be \"sqrt\" or a positive integer");
    }
  }
  return hp;
}

ojson params_to(const forest::HyperParams& hp) {
  ojson j;
  j["n_trees"] = hp.n_trees;
  j["max_depth"] = hp.max_depth ? ojson(*hp.max_depth) : ojson(nullptr);
  j["min_samples_leaf"] = hp.min_samples_leaf;
  j["features_per_split"] =
      hp.features_per_split ? ojson(*hp.features_per_split) : ojson("sqrt");
  return j;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const std::string& text,
                                         const std::filesystem::path& base_dir) {
  const json j = json::parse(text, nullptr, false, true);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("config is not a JSON object");
  PipelineConfig c;
  try {
    reject_unknown(j,
                   {"paths", "target", "communities", "filters", "buckets", "n_resamples",
                    "grid", "cv_folds", "n_perm", "shap_sample_size", "single_model",
                    "windows", "siamese", "seed", "workers"},
                   "config");
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      reject_unknown(p, {"input", "inputs", "dictionary", "bots", "out_dir"}, "paths");
      if (p.contains("input")) c.input_labels.push_back(p["input"].get<std::string>());
      if (p.contains("inputs")) {
        for (const auto& s : p["inputs"]) c.input_labels.push_back(s.get<std::string>());
      }
      for (const auto& s : c.input_labels) c.inputs.push_back(resolve(base_dir, s));
      if (p.contains("dictionary")) {
        c.dictionary_label = p["dictionary"].get<std::string>();
        c.dictionary = resolve(base_dir, c.dictionary_label);
      }
      if (p.contains("bots") && !p["bots"].is_null()) {
        c.bots_label = p["bots"].get<std::string>();
        c.bots = resolve(base_dir, c.bots_label);
      }
      if (p.contains("out_dir")) c.out_dir = resolve(base_dir, p["out_dir"].get<std::string>());
    }
    c.target = j.value("target", c.target);
    c.communities = j.value("communities", c.communities);
    if (j.contains("filters")) {
      const auto& f = j["filters"];
      reject_unknown(f, {"start_utc", "end_utc", "min_comments_per_community", "drop_markers"},
                     "filters");
      c.filters.start_utc = f.value("start_utc", c.filters.start_utc);
      c.filters.end_utc = f.value("end_utc", c.filters.end_utc);
      c.filters.min_comments_per_community =
          f.value("min_comments_per_community", c.filters.min_comments_per_community);
      if (f.contains("drop_markers")) {
        c.filters.drop_markers = f["drop_markers"].get<std::set<std::string>>();
      }
    }
    if (j.contains("buckets")) {
      for (const auto& b : j["buckets"]) {
        c.buckets.push_back(cohort::ActivityBucket::parse(b.get<std::string>()));
      }
    }
    c.n_resamples = j.value("n_resamples", c.n_resamples);
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      if (g.is_string() && g.get<std::string>() == "default") {
        c.grid = forest::default_grid();
      } else if (g.is_array()) {
        c.grid.clear();
        for (const auto& e : g) c.grid.push_back(params_from(e));
      } else {
        throw ConfigError("grid must be \"default\" or a list of hyperparameter objects");
      }
    }
    c.cv_folds = j.value("cv_folds", c.cv_folds);
    c.n_perm = j.value("n_perm", c.n_perm);
    c.shap_sample_size = j.value("shap_sample_size", c.shap_sample_size);
    c.single_model = j.value("single_model", c.single_model);
    if (j.contains("windows")) {
      const auto& w = j["windows"];
      reject_unknown(w, {"temporal", "cumulative", "count", "exclusion_months"}, "windows");
      c.windows.temporal = w.value("temporal", c.windows.temporal);
      c.windows.cumulative = w.value("cumulative", c.windows.cumulative);
      c.windows.count = w.value("count", c.windows.count);
      c.windows.exclusion_months = w.value("exclusion_months", c.windows.exclusion_months);
    }
    if (j.contains("siamese")) {
      const auto& s = j["siamese"];
      reject_unknown(s,
                     {"enabled", "pooled", "epochs", "learning_rate", "batch_size", "widths",
                      "train_fraction"},
                     "siamese");
      c.siamese.enabled = s.value("enabled", c.siamese.enabled);
      c.siamese.pooled = s.value("pooled", c.siamese.pooled);
      auto& t = c.siamese.train;
      t.epochs = s.value("epochs", t.epochs);
      t.learning_rate = s.value("learning_rate", t.learning_rate);
      t.batch_size = s.value("batch_size", t.batch_size);
      t.train_fraction = s.value("train_fraction", t.train_fraction);
      if (s.contains("widths")) {
        const auto w = s["widths"].get<std::vector<std::size_t>>();
        if (w.size() != 3) throw ConfigError("siamese.widths needs three entries");
        t.widths = {w[0], w[1], w[2]};
      }
    }
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return from_json(text, path.parent_path());
}

std::string PipelineConfig::canonical_json() const {
  ojson j;
  j["paths"]["inputs"] = input_labels;
  j["paths"]["dictionary"] = dictionary_label;
  j["paths"]["bots"] = bots_label;
  j["target"] = target;
  j["communities"] = communities;
  j["filters"]["start_utc"] = filters.start_utc;
  j["filters"]["end_utc"] = filters.end_utc;
  j["filters"]["min_comments_per_community"] = filters.min_comments_per_community;
  j["filters"]["drop_markers"] = filters.drop_markers;
  j["buckets"] = ojson::array();
  for (const auto& b : buckets) j["buckets"].push_back(b.label());
  j["n_resamples"] = n_resamples;
  j["grid"] = ojson::array();
  for (const auto& hp : grid) j["grid"].push_back(params_to(hp));
  j["cv_folds"] = cv_folds;
  j["n_perm"] = n_perm;
  j["shap_sample_size"] = shap_sample_size;
  j["single_model"] = single_model;
  j["windows"]["temporal"] = windows.temporal;
  j["windows"]["cumulative"] = windows.cumulative;
  j["windows"]["count"] = windows.count;
  j["windows"]["exclusion_months"] = windows.exclusion_months;
  j["siamese"]["enabled"] = siamese.enabled;
  j["siamese"]["pooled"] = siamese.pooled;
  j["siamese"]["epochs"] = siamese.train.epochs;
  j["siamese"]["learning_rate"] = siamese.train.learning_rate;
  j["siamese"]["batch_size"] = siamese.train.batch_size;
  j["siamese"]["train_fraction"] = siamese.train.train_fraction;
  j["siamese"]["widths"] = siamese.train.widths;
  j["seed"] = seed;
  return j.dump();
}

std::string PipelineConfig::hash() const { return sha256_hex(canonical_json()); }

void PipelineConfig::validate(bool need_paths) const {
  if (target.empty()) throw ConfigError("target community is not set");
  if (communities.empty()) throw ConfigError("no mainstream communities configured");
  std::set<std::string> seen;
  for (const auto& c : communities) {
    if (c == target) throw ConfigError("community '" + c + "' is also the target");
    if (!seen.insert(c).second) throw ConfigError("community '" + c + "' listed twice");
  }
  filters.validate();
  if (n_resamples < 1) throw ConfigError("n_resamples must be >= 1");
  if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
  for (const auto& hp : grid) hp.validate();
  if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
  if (shap_sample_size < 1) throw ConfigError("shap_sample_size must be >= 1");
  if (windows.count < 1) throw ConfigError("windows.count must be >= 1");
  for (int m : windows.exclusion_months) {
    if (m <= 0) throw ConfigError("exclusion months must be positive");
  }
  siamese.train.validate();
  if (out_dir.empty()) throw ConfigError("paths.out_dir is not set");
  if (!need_paths) return;
  if (inputs.empty()) throw ConfigError("paths.inputs is empty");
  for (const auto& p : inputs) {
    if (!std::filesystem::exists(p)) throw ConfigError("input " + p.string() + " does not exist");
  }
  if (dictionary.empty() || !std::filesystem::exists(dictionary)) {
    throw ConfigError("dictionary " + dictionary.string() + " does not exist");
  }
  if (bots && !std::filesystem::exists(*bots)) {
    throw ConfigError("bot list " + bots->string() + " does not exist");
  }
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  static const char* const kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  static const char* const kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

}  // namespace mindprint::pipeline
