// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

// Model-fitting and analysis stages.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"
#include "mindprint/explain.hpp"
#include "mindprint/parallel.hpp"
#include "mindprint/random.hpp"
#include "mindprint/siamese.hpp"
#include "mindprint/stats.hpp"
#include "mindprint/trajectory.hpp"
#include "pipeline_internal.hpp"

namespace mindprint::pipeline {

using json = nlohmann::ordered_json;
using namespace detail;

namespace {

std::vector<DatasetEntry> select(const std::vector<DatasetEntry>& entries,
                                 const std::function<bool(const DatasetEntry&)>& keep) {
  std::vector<DatasetEntry> out;
  for (const auto& e : entries) {
    if (keep(e)) out.push_back(e);
  }
  return out;
}

bool is_study_one(const DatasetEntry& e) { return e.scope == "all"; }

std::string fmt(double v) { return std::isnan(v) ? "" : format_double(v); }

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  long double s = 0;
  for (double x : v) s += x;
  return static_cast<double>(s / v.size());
}

json test_json(const stats::TestResult& r) {
  return {{"method", std::string(stats::method_name(r.method))},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"n_a", r.n_a},
          {"n_b", r.n_b},
          {"exact", r.exact}};
}

// Positive rows of a dataset (both splits), normalized with `norm`.
Matrix positive_rows(const cohort::LabeledDataset& ds, const cohort::Normalizer& norm) {
  Matrix m(0, ds.dimension());
  for (const auto& r : ds.rows) {
    if (r.label == 1) m.append_row(norm.apply(r.features));
  }
  return m;
}

// The pooled model of one resample: train rows of every community's
// any-activity dataset, normalized together.
struct SingleModelData {
  PreparedData data;
  std::vector<std::string> communities;
  std::vector<Examples> test_by_community;
  std::vector<Matrix> positives_by_community;
  std::uint64_t seed = 0;
};

std::map<std::size_t, std::vector<DatasetEntry>> single_model_groups(
    const PipelineConfig& config, const std::vector<DatasetEntry>& entries) {
  std::map<std::size_t, std::vector<DatasetEntry>> groups;
  for (const auto& e : entries) {
    if (e.scope == "all" && e.bucket == kAnyBucket) groups[e.resample].push_back(e);
  }
  for (auto it = groups.begin(); it != groups.end();) {
    it = it->second.size() < 2 || !config.single_model ? groups.erase(it) : std::next(it);
  }
  return groups;
}

SingleModelData single_model_data(const PipelineConfig& config,
                                  const std::vector<DatasetEntry>& group, std::size_t resample) {
  SingleModelData s;
  std::vector<cohort::LabeledDataset> sets;
  for (const auto& e : group) sets.push_back(load_dataset(config, e));
  const std::size_t d = sets.front().dimension();
  s.data.train = Examples{Matrix(0, d), {}};
  for (const auto& ds : sets) {
    const auto tr = ds.examples(cohort::Split::kTrain);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      s.data.train.x.append_row(tr.x.row(i));
      s.data.train.y.push_back(tr.y[i]);
    }
  }
  s.data.normalizer = cohort::Normalizer::fit(s.data.train.x);
  s.data.normalizer.apply(s.data.train.x);
  s.data.test = Examples{Matrix(0, d), {}};
  for (std::size_t c = 0; c < sets.size(); ++c) {
    s.communities.push_back(group[c].community);
    auto te = sets[c].examples(cohort::Split::kTest);
    s.data.normalizer.apply(te.x);
    for (std::size_t i = 0; i < te.size(); ++i) {
      s.data.test.x.append_row(te.x.row(i));
      s.data.test.y.push_back(te.y[i]);
    }
    s.test_by_community.push_back(std::move(te));
    s.positives_by_community.push_back(positive_rows(sets[c], s.data.normalizer));
  }
  s.seed = task_seed(config.seed, "single", "*", "any/all", resample);
  return s;
}

fs::path single_model_path(std::size_t resample) {
  return fs::path("models") / "single" / ("r" + std::to_string(resample) + ".json");
}

// Fits every entry in parallel; entries that fail with a DataError get a
// NaN accuracy and a message.
struct FitRow {
  DatasetEntry entry;
  std::optional<FitResult> fit;
  std::string error;
};

std::vector<FitRow> fit_all(const PipelineConfig& config, const std::vector<DatasetEntry>& entries,
                            const std::vector<std::string>& names, bool save_models,
                            const std::function<std::uint64_t(const DatasetEntry&)>& seed_of) {
  std::vector<FitRow> out(entries.size());
  parallel_for(entries.size(), resolve_workers(config.workers), [&](std::size_t i) {
    out[i].entry = entries[i];
    try {
      const auto ds = load_dataset(config, entries[i]);
      auto fit = fit_and_score(prepare(ds), config, seed_of(entries[i]), names);
      if (save_models) fit.model.save(config.out_dir / model_path(entries[i]));
      out[i].fit = std::move(fit);
    } catch (const DataError& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

void log_failures(const Log& log, const std::vector<FitRow>& rows) {
  for (const auto& r : rows) {
    if (!r.fit) {
      emit(log, "warning: " + r.entry.community + "/" + r.entry.bucket + "/" + r.entry.scope +
                    "/r" + std::to_string(r.entry.resample) + ": " + r.error);
    }
  }
}

std::vector<std::string> feature_header(std::vector<std::string> head, std::size_t d) {
  for (std::size_t k = 0; k < d; ++k) head.push_back("f_" + std::to_string(k + 1));
  return head;
}

}  // namespace

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

void run_train(const PipelineConfig& config, const Log& log) {
  config.validate(false);
  const auto all = read_dataset_index(config);
  const auto names = feature_names(config);
  const auto entries = select(all, is_study_one);
  emit(log, "train: fitting " + std::to_string(entries.size()) + " models");
  const auto fits = fit_all(config, entries, names, true,
                            [](const DatasetEntry& e) { return e.seed; });
  log_failures(log, fits);

  std::vector<std::vector<std::string>> rows;
  std::map<std::pair<std::string, std::size_t>, double> any_accuracy;
  for (const auto& f : fits) {
    const auto& e = f.entry;
    rows.push_back({e.community, e.bucket, e.bucket_label, e.scope, std::to_string(e.resample),
                    std::to_string(e.seed), f.fit ? f.fit->grid.best.label() : "",
                    f.fit ? fmt(f.fit->cv_accuracy) : "", f.fit ? fmt(f.fit->accuracy) : "",
                    f.error});
    if (f.fit && e.bucket == kAnyBucket) any_accuracy[{e.community, e.resample}] = f.fit->accuracy;
  }
  write_table(config.out_dir / kTrainCsv,
              {"community", "bucket", "bucket_label", "scope", "resample", "seed",
               "hyperparams", "cv_accuracy", "accuracy", "error"},
              rows);

  // Single model over pooled communities.
  std::vector<std::vector<std::string>> single_rows;
  for (const auto& [r, group] : single_model_groups(config, all)) {
    const auto s = single_model_data(config, group, r);
    const auto fit = fit_and_score(s.data, config, s.seed, names);
    fit.model.save(config.out_dir / single_model_path(r));
    for (std::size_t c = 0; c < s.communities.size(); ++c) {
      const double acc = forest::evaluate(fit.model, s.test_by_community[c]);
      const auto it = any_accuracy.find({s.communities[c], r});
      const double own = it == any_accuracy.end() ? std::nan("") : it->second;
      single_rows.push_back({s.communities[c], std::to_string(r), std::to_string(s.seed),
                             fmt(fit.accuracy), fmt(acc), fmt(own), fmt((own - acc) * 100.0)});
    }
    emit(log, "train: single model r" + std::to_string(r) + " accuracy " + fmt(fit.accuracy));
  }
  if (config.single_model) {
    write_table(config.out_dir / kSingleModelCsv,
                {"community", "resample", "seed", "single_accuracy", "single_community_accuracy",
                 "community_accuracy", "delta_pp"},
                single_rows);
  }
}

// ---------------------------------------------------------------------------
// permtest
// ---------------------------------------------------------------------------

void run_permtest(const PipelineConfig& config, const Log& log) {
  config.validate(false);
  if (config.n_perm == 0) {
    emit(log, "permtest: disabled (n_perm = 0)");
    return;
  }
  require(config, kTrainCsv, "train");
  const auto entries = select(read_dataset_index(config), is_study_one);
  struct Row {
    std::optional<forest::PermutationReport> report;
    std::string error;
  };
  std::vector<Row> out(entries.size());
  emit(log, "permtest: " + std::to_string(entries.size()) + " models x " +
                std::to_string(config.n_perm) + " permutations");
  parallel_for(entries.size(), resolve_workers(config.workers), [&](std::size_t i) {
    const auto path = config.out_dir / model_path(entries[i]);
    if (!fs::exists(path)) {
      out[i].error = "no trained model";
      return;
    }
    try {
      const auto model = forest::ForestModel::load(path);
      const auto data = prepare(load_dataset(config, entries[i]));
      out[i].report = forest::permutation_test(data.train, data.test, model.params,
                                               config.n_perm, model.seed, 1);
    } catch (const DataError& e) {
      out[i].error = e.what();
    }
  });
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto& r = out[i].report;
    rows.push_back({e.community, e.bucket, e.scope, std::to_string(e.resample),
                    std::to_string(e.seed), r ? fmt(r->observed_accuracy) : "",
                    std::to_string(config.n_perm), r ? std::to_string(r->exceed_count) : "",
                    r ? fmt(r->p_value) : "", out[i].error});
  }
  write_table(config.out_dir / kPermtestCsv,
              {"community", "bucket", "scope", "resample", "seed", "accuracy", "n_perm",
               "exceed_count", "p_value", "error"},
              rows);
}

// ---------------------------------------------------------------------------
// shap
// ---------------------------------------------------------------------------

void run_shap(const PipelineConfig& config, const Log& log) {
  config.validate(false);
  require(config, kTrainCsv, "train");
  const auto all = read_dataset_index(config);
  const auto entries = select(all, [](const DatasetEntry& e) {
    return e.scope == "all" && e.bucket == kAnyBucket;
  });
  std::vector<std::optional<explain::ImportanceVector>> vecs(entries.size());
  parallel_for(entries.size(), resolve_workers(config.workers), [&](std::size_t i) {
    const auto path = config.out_dir / model_path(entries[i]);
    if (!fs::exists(path)) return;
    const auto model = forest::ForestModel::load(path);
    const auto ds = load_dataset(config, entries[i]);
    const auto norm = cohort::Normalizer::fit(ds.examples(cohort::Split::kTrain).x);
    auto v = explain::importance_vector(
        model, positive_rows(ds, norm), config.shap_sample_size,
        task_seed(config.seed, "shap", entries[i].community, "any/all", entries[i].resample), 1);
    v.community = entries[i].community;
    vecs[i] = std::move(v);
  });

  std::vector<std::vector<std::string>> by_seed;
  std::map<std::string, std::vector<const explain::ImportanceVector*>> per_community;
  std::size_t d = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!vecs[i]) continue;
    d = vecs[i]->values.size();
    std::vector<std::string> row{entries[i].community, std::to_string(entries[i].resample),
                                 std::to_string(vecs[i]->n_instances)};
    for (double x : vecs[i]->values) row.push_back(format_double(x));
    by_seed.push_back(std::move(row));
    per_community[entries[i].community].push_back(&*vecs[i]);
  }
  if (per_community.empty()) {
    throw DataError("no trained any-activity models; run `mindprint train` first");
  }
  write_table(config.out_dir / kImportanceBySeedCsv,
              feature_header({"community", "resample", "n_instances"}, d), by_seed);

  std::vector<explain::ImportanceVector> averaged;
  for (const auto& c : config.communities) {
    const auto it = per_community.find(c);
    if (it == per_community.end()) continue;
    explain::ImportanceVector v;
    v.community = c;
    v.values.assign(d, 0.0);
    for (const auto* p : it->second) {
      for (std::size_t k = 0; k < d; ++k) v.values[k] += p->values[k];
      v.n_instances += p->n_instances;
    }
    for (double& x : v.values) x /= static_cast<double>(it->second.size());
    averaged.push_back(std::move(v));
  }
  explain::write_importance_csv(config.out_dir / kImportanceCsv, averaged);
  emit(log, "shap: importance vectors for " + std::to_string(averaged.size()) + " communities");

  if (!config.single_model) return;
  std::vector<std::vector<std::string>> single_rows;
  for (const auto& [r, group] : single_model_groups(config, all)) {
    const auto path = config.out_dir / single_model_path(r);
    if (!fs::exists(path)) continue;
    const auto model = forest::ForestModel::load(path);
    const auto s = single_model_data(config, group, r);
    std::vector<std::optional<explain::ImportanceVector>> sv(s.communities.size());
    parallel_for(sv.size(), resolve_workers(config.workers), [&](std::size_t c) {
      if (s.positives_by_community[c].rows() == 0) return;
      sv[c] = explain::importance_vector(
          model, s.positives_by_community[c], config.shap_sample_size,
          task_seed(config.seed, "shap", s.communities[c], "single", r), 1);
    });
    for (std::size_t c = 0; c < sv.size(); ++c) {
      if (!sv[c]) continue;
      std::vector<std::string> row{s.communities[c], std::to_string(r),
                                   std::to_string(sv[c]->n_instances)};
      for (double x : sv[c]->values) row.push_back(format_double(x));
      single_rows.push_back(std::move(row));
    }
  }
  if (!single_rows.empty()) {
    write_table(config.out_dir / kSingleShapCsv,
                feature_header({"community", "resample", "n_instances"}, d), single_rows);
  }
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

namespace {

void write_pca(const fs::path& path, const std::vector<explain::ImportanceVector>& vecs) {
  const std::size_t d = vecs.front().values.size();
  Matrix m(0, d);
  for (const auto& v : vecs) m.append_row(v.values);
  const std::size_t k = std::min<std::size_t>({2, vecs.size() - 1, d});
  const auto pca = explain::pca_project(m, k);
  std::vector<std::string> head{"community"};
  for (std::size_t j = 0; j < k; ++j) head.push_back("pc" + std::to_string(j + 1));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    std::vector<std::string> row{vecs[i].community};
    for (std::size_t j = 0; j < k; ++j) row.push_back(format_double(pca.coordinates(i, j)));
    rows.push_back(std::move(row));
  }
  write_table(path, head, rows);

  std::vector<std::vector<std::string>> comp;
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<std::string> row{"pc" + std::to_string(j + 1),
                                 format_double(pca.explained_variance[j])};
    for (std::size_t f = 0; f < d; ++f) row.push_back(format_double(pca.components(j, f)));
    comp.push_back(std::move(row));
  }
  auto comp_path = path;
  comp_path.replace_filename(path.stem().string() + "_components.csv");
  write_table(comp_path, feature_header({"component", "explained_variance"}, d), comp);
}

}  // namespace

void run_cluster(const PipelineConfig& config, const Log& log) {
  config.validate(false);
  require(config, kImportanceCsv, "shap");
  const auto vecs = explain::read_importance_csv(config.out_dir / kImportanceCsv);
  if (vecs.size() < 2) {
    emit(log, "warning: cluster needs at least 2 communities with importance vectors");
    return;
  }
  const auto sim = explain::cosine_similarity_matrix(vecs);
  std::vector<std::string> labels;
  for (const auto& v : vecs) labels.push_back(v.community);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    std::vector<std::string> row{labels[i]};
    for (std::size_t j = 0; j < vecs.size(); ++j) row.push_back(format_double(sim(i, j)));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> head{"community"};
  head.insert(head.end(), labels.begin(), labels.end());
  write_table(config.out_dir / kSimilarityCsv, head, rows);

  const auto tree = explain::upgma(explain::cosine_distance(sim), labels);
  write_text_file(config.out_dir / kDendrogramNwk, tree.newick() + "\n");
  write_text_file(config.out_dir / kDendrogramJson, tree.to_json() + "\n");
  write_pca(config.out_dir / kPcaCsv, vecs);

  if (fs::exists(config.out_dir / kSingleShapCsv)) {
    const auto table = read_csv_file(config.out_dir / kSingleShapCsv);
    std::map<std::string, std::pair<std::vector<double>, std::size_t>> acc;
    for (const auto& row : table.rows) {
      auto& [sum, n] = acc[row[0]];
      if (sum.empty()) sum.assign(row.size() - 3, 0.0);
      for (std::size_t k = 3; k < row.size(); ++k) sum[k - 3] += parse_double(row[k]);
      ++n;
    }
    std::vector<explain::ImportanceVector> single;
    for (const auto& c : config.communities) {
      const auto it = acc.find(c);
      if (it == acc.end()) continue;
      explain::ImportanceVector v{c, it->second.first, it->second.second};
      for (double& x : v.values) x /= static_cast<double>(it->second.second);
      single.push_back(std::move(v));
    }
    if (single.size() >= 2) write_pca(config.out_dir / kPcaSingleCsv, single);
  }
  emit(log, "cluster: " + tree.newick());
}

// ---------------------------------------------------------------------------
// prepost
// ---------------------------------------------------------------------------

void run_prepost(const PipelineConfig& config, const Log& log) {
  config.validate(false);
  const auto entries = select(read_dataset_index(config), [](const DatasetEntry& e) {
    return e.scope == "pre" || e.scope == "post";
  });
  if (entries.empty()) throw DataError("no pre/post datasets; run `mindprint dataset` first");
  const auto fits = fit_all(config, entries, feature_names(config), false,
                            [](const DatasetEntry& e) { return derive_seed(e.seed, e.scope); });
  log_failures(log, fits);

  std::map<std::pair<std::string, std::size_t>, std::pair<double, double>> paired;
  for (const auto& f : fits) {
    if (!f.fit) continue;
    auto& p = paired.try_emplace({f.entry.community, f.entry.resample},
                                 std::nan(""), std::nan(""))
                  .first->second;
    (f.entry.scope == "pre" ? p.first : p.second) = f.fit->accuracy;
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<double> pre, post, diff;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_community;
  for (const auto& c : config.communities) {
    for (const auto& [key, p] : paired) {
      if (key.first != c) continue;
      rows.push_back({c, std::to_string(key.second), fmt(p.first), fmt(p.second),
                      fmt(p.second - p.first)});
      if (!std::isnan(p.first)) {
        pre.push_back(p.first);
        by_community[c].first.push_back(p.first);
      }
      if (!std::isnan(p.second)) {
        post.push_back(p.second);
        by_community[c].second.push_back(p.second);
      }
      if (!std::isnan(p.first) && !std::isnan(p.second)) diff.push_back(p.second - p.first);
    }
  }
  write_table(config.out_dir / kPrepostCsv,
              {"community", "resample", "pre_accuracy", "post_accuracy", "difference"}, rows);

  json s;
  s["median_pre"] = median(pre);
  s["median_post"] = median(post);
  s["median_difference"] = median(diff);
  s["n_pre"] = pre.size();
  s["n_post"] = post.size();
  s["mann_whitney"] = (pre.empty() || post.empty())
                          ? json(nullptr)
                          : test_json(stats::mann_whitney_u(pre, post));
  json per = json::object();
  for (const auto& [c, v] : by_community) {
    per[c] = {{"median_pre", median(v.first)}, {"median_post", median(v.second)}};
  }
  s["communities"] = per;
  write_text_file(config.out_dir / kPrepostSummary, s.dump(2) + "\n");
  emit(log, "prepost: median pre " + fmt(median(pre)) + ", post " + fmt(median(post)));
}

// ---------------------------------------------------------------------------
// windows
// ---------------------------------------------------------------------------

namespace {

struct WindowKey {
  std::string kind;  // temporal, cumulative, exclusion
  int position = 0;  // window number or months
};

std::optional<WindowKey> parse_window_scope(const std::string& scope) {
  if (scope.size() > 3 && (scope[0] == 'T' || scope[0] == 'N') && scope.compare(1, 2, "-w") == 0) {
    return WindowKey{scope[0] == 'T' ? "temporal" : "cumulative", std::stoi(scope.substr(3))};
  }
  if (scope.rfind("excl-", 0) == 0 && scope.back() == 'm') {
    return WindowKey{"exclusion", std::stoi(scope.substr(5, scope.size() - 6))};
  }
  return std::nullopt;
}

}  // namespace

void run_windows(const PipelineConfig& config, const Log& log) {
  config.validate(false);
  const auto entries = select(read_dataset_index(config), [](const DatasetEntry& e) {
    return parse_window_scope(e.scope).has_value();
  });
  if (entries.empty()) throw DataError("no window datasets; run `mindprint dataset` first");
  const auto fits = fit_all(config, entries, feature_names(config), false,
                            [](const DatasetEntry& e) { return derive_seed(e.seed, e.scope); });
  log_failures(log, fits);

  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::map<int, std::vector<double>>> curves;
  for (const auto& f : fits) {
    const auto key = *parse_window_scope(f.entry.scope);
    rows.push_back({key.kind, f.entry.scope, std::to_string(key.position), f.entry.community,
                    std::to_string(f.entry.resample), std::to_string(f.entry.seed),
                    std::to_string(f.entry.rows), f.fit ? fmt(f.fit->accuracy) : "", f.error});
    if (f.fit) curves[key.kind][key.position].push_back(f.fit->accuracy);
  }
  write_table(config.out_dir / kWindowsCsv,
              {"kind", "window", "position", "community", "resample", "seed", "rows", "accuracy",
               "error"},
              rows);

  json s = json::object();
  for (const auto& [kind, points] : curves) {
    json k;
    std::vector<double> curve;
    json pts = json::array();
    // Exclusion curves run from the longest gap to the shortest, so that in
    // every curve later points lie closer to tau.
    std::vector<std::pair<int, const std::vector<double>*>> ordered;
    for (const auto& [pos, acc] : points) ordered.emplace_back(pos, &acc);
    if (kind == "exclusion") std::reverse(ordered.begin(), ordered.end());
    for (const auto& [pos, acc] : ordered) {
      curve.push_back(mean(*acc));
      pts.push_back({{"position", pos}, {"mean_accuracy", curve.back()},
                     {"median_accuracy", median(*acc)}, {"n", acc->size()}});
    }
    k["points"] = pts;
    k["mann_kendall"] =
        curve.size() >= 4 ? test_json(trajectory::trend_over_windows(curve)) : json(nullptr);
    s[kind] = k;
  }
  write_text_file(config.out_dir / kWindowsSummary, s.dump(2) + "\n");
  emit(log, "windows: " + std::to_string(rows.size()) + " window models");
}

// ---------------------------------------------------------------------------
// siamese
// ---------------------------------------------------------------------------

void run_siamese(const PipelineConfig& config, const Log& log) {
  config.validate(false);
  if (!config.siamese.enabled) {
    emit(log, "siamese: disabled");
    return;
  }
  config.siamese.train.validate();
  require(config, kEmbeddingsCsv, "featurize");
  const auto store = lexicon::read_embeddings(config.out_dir / kEmbeddingsCsv,
                                              config.out_dir / kEmbeddingsJson);
  // community -> author -> quadruple
  std::map<std::string, std::map<std::string, siamese::WindowQuadruple>> quads;
  for (const auto& e : store.rows) {
    const auto it = std::find(kHalfScopes.begin(), kHalfScopes.end(), e.scope_tag);
    if (it == kHalfScopes.end()) continue;
    auto& q = quads[e.community][e.author];
    q.author = e.author;
    std::vector<double>* slot[] = {&q.b1, &q.b2, &q.a1, &q.a2};
    *slot[it - kHalfScopes.begin()] = e.vector;
  }
  if (quads.empty()) {
    throw DataError("embeddings have no pre/post half scopes; run 'featurize' with siamese "
                    "enabled first");
  }

  struct Group {
    std::string name;
    std::vector<siamese::WindowQuadruple> quads;
  };
  std::vector<Group> groups;
  if (config.siamese.pooled) {
    Group g{"*", {}};
    for (const auto& c : config.communities) {
      for (const auto& [a, q] : quads[c]) g.quads.push_back(q);
    }
    groups.push_back(std::move(g));
  } else {
    for (const auto& c : config.communities) {
      Group g{c, {}};
      for (const auto& [a, q] : quads[c]) g.quads.push_back(q);
      groups.push_back(std::move(g));
    }
  }

  struct Outcome {
    std::uint64_t seed = 0;
    siamese::PairSet pairs;
    std::optional<siamese::TrainResult> result;
    std::string error;
  };
  std::vector<Outcome> out(groups.size());
  parallel_for(groups.size(), resolve_workers(config.workers), [&](std::size_t i) {
    auto& o = out[i];
    o.seed = task_seed(config.seed, "siamese", groups[i].name, "pairs", 0);
    o.pairs = siamese::build_pairs(groups[i].quads);
    try {
      o.result = siamese::train_siamese(o.pairs.pairs, config.siamese.train, o.seed);
      write_text_file(config.out_dir / "models/siamese" / (sanitize(groups[i].name) + ".json"),
                      o.result->model.to_json() + "\n");
    } catch (const DataError& e) {
      o.error = e.what();
    }
  });

  std::vector<std::vector<std::string>> rows, loss_rows;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& o = out[i];
    const auto& m = o.result ? o.result->test_metrics : siamese::Metrics{};
    rows.push_back({groups[i].name, std::to_string(o.seed),
                    std::to_string(groups[i].quads.size() - o.pairs.skipped),
                    std::to_string(o.pairs.pairs.size()), std::to_string(o.pairs.skipped),
                    o.result ? std::to_string(o.result->test_pairs.size()) : "",
                    o.result ? fmt(m.accuracy) : "", o.result ? fmt(m.precision) : "", o.error});
    if (!o.error.empty()) emit(log, "warning: siamese " + groups[i].name + ": " + o.error);
    if (o.result) {
      for (std::size_t ep = 0; ep < o.result->loss_trace.size(); ++ep) {
        loss_rows.push_back(
            {groups[i].name, std::to_string(ep + 1), format_double(o.result->loss_trace[ep])});
      }
    }
  }
  write_table(config.out_dir / kSiameseCsv,
              {"community", "seed", "n_users", "n_pairs", "skipped", "test_pairs", "accuracy",
               "precision", "error"},
              rows);
  write_table(config.out_dir / "results/siamese_loss.csv", {"community", "epoch", "loss"},
              loss_rows);
  emit(log, "siamese: " + std::to_string(groups.size()) + " models");
}

}  // namespace mindprint::pipeline
