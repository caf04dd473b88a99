// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include "mindprint/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"
#include "mindprint/parallel.hpp"
#include "mindprint/random.hpp"
#include "mindprint/stats.hpp"

namespace mindprint::forest {

using json = nlohmann::ordered_json;

void HyperParams::validate() const {
  if (n_trees == 0) throw ConfigError("n_trees must be >= 1");
  if (min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be >= 1");
  if (max_depth && *max_depth == 0) throw ConfigError("max_depth must be >= 1");
  if (features_per_split && *features_per_split == 0) {
    throw ConfigError("features_per_split must be >= 1");
  }
}

std::size_t HyperParams::resolved_features(std::size_t dimension) const {
  std::size_t m = features_per_split
                      ? *features_per_split
                      : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(dimension))));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(dimension, 1));
}

std::string HyperParams::label() const {
  return "trees=" + std::to_string(n_trees) +
         ",depth=" + (max_depth ? std::to_string(*max_depth) : std::string("none")) +
         ",leaf=" + std::to_string(min_samples_leaf) + ",features=" +
         (features_per_split ? std::to_string(*features_per_split) : std::string("sqrt"));
}

std::vector<HyperParams> default_grid() {
  std::vector<HyperParams> grid;
  for (std::size_t trees : {100, 300}) {
    for (std::optional<std::size_t> depth :
         {std::optional<std::size_t>{}, std::optional<std::size_t>{10},
          std::optional<std::size_t>{20}}) {
      for (std::size_t leaf : {1, 5}) {
        grid.push_back(HyperParams{trees, depth, leaf, std::nullopt});
      }
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
  const TreeNode* n = &nodes[0];
  while (!n->is_leaf()) {
    n = &nodes[x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right];
  }
  return *n;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Examples& data, const HyperParams& params, std::uint64_t seed)
      : data_(data),
        params_(params),
        rng_(seed),
        d_(data.x.cols()),
        m_(params.resolved_features(data.x.cols())),
        features_(d_) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree build() {
    const std::size_t n = data_.size();
    rows_.resize(n);
    for (auto& r : rows_) r = static_cast<std::uint32_t>(rng_.uniform_index(n));
    grow(0, n, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
  };

  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    TreeNode node;
    for (std::size_t i = begin; i < end; ++i) ++node.count[data_.y[rows_[i]]];

    const std::size_t n = end - begin;
    const bool pure = node.count[0] == 0 || node.count[1] == 0;
    const bool depth_limit = params_.max_depth && depth >= *params_.max_depth;
    if (pure || depth_limit || n < 2 * params_.min_samples_leaf) {
      tree_.nodes[id] = node;
      return id;
    }

    const Split split = best_split(begin, end);
    if (split.feature < 0) {
      tree_.nodes[id] = node;
      return id;
    }
    const auto f = static_cast<std::size_t>(split.feature);
    const auto mid = static_cast<std::size_t>(
        std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                       rows_.begin() + static_cast<std::ptrdiff_t>(end),
                       [&](std::uint32_t r) { return data_.x(r, f) <= split.threshold; }) -
        rows_.begin());
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = grow(begin, mid, depth + 1);
    node.right = grow(mid, end, depth + 1);
    tree_.nodes[id] = node;
    return id;
  }

  // Visits features in random order until m_ non-constant ones have been
  // scored. Score is sum_c n_c^2 / n over both children, which ranks splits
  // the same way as the weighted Gini impurity decrease.
  Split best_split(std::size_t begin, std::size_t end) {
    Split best;
    const std::size_t n = end - begin;
    const std::size_t leaf = params_.min_samples_leaf;
    std::size_t scored = 0;
    std::uint32_t total[2] = {0, 0};
    for (std::size_t i = begin; i < end; ++i) ++total[data_.y[rows_[i]]];

    for (std::size_t visited = 0; visited < d_ && scored < m_; ++visited) {
      const std::size_t j = visited + rng_.uniform_index(d_ - visited);
      std::swap(features_[visited], features_[j]);
      const std::size_t f = features_[visited];

      values_.clear();
      for (std::size_t i = begin; i < end; ++i) {
        values_.emplace_back(data_.x(rows_[i], f), data_.y[rows_[i]]);
      }
      std::sort(values_.begin(), values_.end());
      if (values_.front().first == values_.back().first) continue;
      ++scored;

      std::uint32_t left[2] = {0, 0};
      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++left[values_[i].second];
        if (values_[i].first == values_[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < leaf || nr < leaf) continue;
        const double l0 = left[0], l1 = left[1];
        const double r0 = total[0] - left[0], r1 = total[1] - left[1];
        const double score = (l0 * l0 + l1 * l1) / static_cast<double>(nl) +
                             (r0 * r0 + r1 * r1) / static_cast<double>(nr);
        if (score > best.score) {
          const double lo = values_[i].first, hi = values_[i + 1].first;
          double thr = lo + (hi - lo) / 2.0;
          if (thr >= hi) thr = lo;
          best = Split{static_cast<std::int32_t>(f), thr, score};
        }
      }
    }
    return best;
  }

  const Examples& data_;
  const HyperParams& params_;
  Rng rng_;
  std::size_t d_;
  std::size_t m_;
  std::vector<std::size_t> features_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::pair<double, std::uint8_t>> values_;
  Tree tree_;
};

void check_width(const ForestModel& model, std::size_t width) {
  if (width != model.dimension) {
    throw DataError("input has " + std::to_string(width) + " features, model expects " +
                    std::to_string(model.dimension));
  }
}

json node_to_json(const Tree& tree, std::int32_t id) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
  json j;
  j["counts"] = {n.count[0], n.count[1]};
  if (!n.is_leaf()) {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = node_to_json(tree, n.left);
    j["right"] = node_to_json(tree, n.right);
  }
  return j;
}

std::int32_t node_from_json(const nlohmann::json& j, Tree& tree) {
  const auto id = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  TreeNode node;
  node.count = {j.at("counts").at(0).get<std::uint32_t>(),
                j.at("counts").at(1).get<std::uint32_t>()};
  if (j.contains("feature")) {
    node.feature = j.at("feature").get<std::int32_t>();
    node.threshold = j.at("threshold").get<double>();
    node.left = node_from_json(j.at("left"), tree);
    node.right = node_from_json(j.at("right"), tree);
  }
  tree.nodes[static_cast<std::size_t>(id)] = node;
  return id;
}

Examples subset(const Examples& data, std::span<const std::size_t> idx) {
  Examples out;
  for (auto i : idx) {
    out.x.append_row(data.x.row(i));
    out.y.push_back(data.y[i]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint8_t ForestModel::predict(std::span<const double> x) const {
  check_width(*this, x.size());
  std::size_t votes = 0;
  for (const auto& t : trees) votes += t.predict(x);
  return 2 * votes > trees.size() ? 1 : 0;
}

std::vector<std::uint8_t> ForestModel::predict(const Matrix& x) const {
  check_width(*this, x.cols());
  std::vector<std::uint8_t> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
  return out;
}

double ForestModel::vote_share(std::span<const double> x) const {
  check_width(*this, x.size());
  std::size_t votes = 0;
  for (const auto& t : trees) votes += t.predict(x);
  return static_cast<double>(votes) / static_cast<double>(trees.size());
}

std::string ForestModel::to_json() const {
  json j;
  j["format"] = "mindprint-forest";
  j["version"] = 1;
  j["dimension"] = dimension;
  j["feature_names"] = feature_names;
  j["seed"] = seed;
  json hp;
  hp["n_trees"] = params.n_trees;
  hp["max_depth"] = params.max_depth ? json(*params.max_depth) : json(nullptr);
  hp["min_samples_leaf"] = params.min_samples_leaf;
  hp["features_per_split"] =
      params.features_per_split ? json(*params.features_per_split) : json("sqrt");
  j["hyperparams"] = hp;
  j["trees"] = json::array();
  for (const auto& t : trees) j["trees"].push_back(node_to_json(t, 0));
  return j.dump();
}

ForestModel ForestModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("format", "") != "mindprint-forest") {
    throw DataError("not a forest model document");
  }
  ForestModel m;
  try {
    m.dimension = j.at("dimension").get<std::size_t>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& hp = j.at("hyperparams");
    m.params.n_trees = hp.at("n_trees").get<std::size_t>();
    if (!hp.at("max_depth").is_null()) m.params.max_depth = hp.at("max_depth").get<std::size_t>();
    m.params.min_samples_leaf = hp.at("min_samples_leaf").get<std::size_t>();
    if (hp.at("features_per_split").is_number()) {
      m.params.features_per_split = hp.at("features_per_split").get<std::size_t>();
    }
    for (const auto& tj : j.at("trees")) {
      Tree t;
      node_from_json(tj, t);
      for (const auto& n : t.nodes) {
        if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= m.dimension) {
          throw DataError("split feature out of range");
        }
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed forest model: ") + e.what());
  }
  if (m.trees.empty()) throw DataError("forest model has no trees");
  return m;
}

void ForestModel::save(const std::filesystem::path& path) const {
  write_text_file(path, to_json() + "\n");
}

ForestModel ForestModel::load(const std::filesystem::path& path) {
  return from_json(read_text_file(path));
}

ForestModel train_forest(const Examples& train, const HyperParams& params,
                         std::uint64_t seed, std::size_t workers) {
  params.validate();
  if (train.size() < 2) throw DataError("training needs at least 2 rows");
  if (train.count(0) == 0 || train.count(1) == 0) {
    throw DataError("training data contain a single class");
  }
  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.dimension = train.x.cols();
  model.trees.resize(params.n_trees);
  parallel_for(params.n_trees, workers, [&](std::size_t t) {
    model.trees[t] = TreeBuilder(train, params, derive_seed(seed, t)).build();
  });
  return model;
}

double evaluate(const ForestModel& model, const Examples& data) {
  return stats::accuracy(model.predict(data.x), data.y);
}

GridResult grid_search(const Examples& train, std::span<const HyperParams> grid,
                       std::size_t k, std::uint64_t seed, std::size_t workers) {
  if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
  if (k < 2) throw ConfigError("cross-validation needs k >= 2");
  for (const auto& hp : grid) hp.validate();

  // Stratified fold assignment.
  std::vector<std::size_t> fold(train.size());
  Rng rng(derive_seed(seed, "folds"));
  for (std::uint8_t label : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train.y[i] == label) idx.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t j = 0; j < idx.size(); ++j) fold[idx[j]] = j % k;
  }
  std::vector<Examples> fit(k), held(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> in, out;
    for (std::size_t i = 0; i < train.size(); ++i) (fold[i] == f ? out : in).push_back(i);
    fit[f] = subset(train, in);
    held[f] = subset(train, out);
  }

  const std::size_t tasks = grid.size() * k;
  std::vector<double> acc(tasks, std::numeric_limits<double>::quiet_NaN());
  parallel_for(tasks, workers, [&](std::size_t task) {
    const std::size_t g = task / k, f = task % k;
    if (held[f].size() == 0 || fit[f].size() < 2 || fit[f].count(0) == 0 ||
        fit[f].count(1) == 0) {
      return;
    }
    const auto model = train_forest(fit[f], grid[g], derive_seed(seed, f), 1);
    acc[task] = evaluate(model, held[f]);
  });

  GridResult res;
  res.mean_accuracy.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  bool any = false;
  double best = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    std::size_t valid = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const double a = acc[g * k + f];
      if (!std::isnan(a)) {
        sum += a;
        ++valid;
      }
    }
    if (valid == 0) continue;
    res.mean_accuracy[g] = sum / static_cast<double>(valid);
    any = true;
    if (res.mean_accuracy[g] > best) {
      best = res.mean_accuracy[g];
      res.best_index = g;
    }
  }
  if (!any) throw DataError("grid search: every cross-validation fold was invalid");
  res.best = grid[res.best_index];
  return res;
}

PermutationReport permutation_test(const Examples& train, const Examples& test,
                                   const HyperParams& params, std::size_t n_perm,
                                   std::uint64_t seed, std::size_t workers) {
  if (n_perm < 1) throw ConfigError("n_perm must be >= 1");
  PermutationReport rep;
  rep.observed_accuracy = evaluate(train_forest(train, params, seed, workers), test);
  rep.permuted_accuracies.assign(n_perm, 0.0);

  parallel_for(n_perm, workers, [&](std::size_t i) {
    const std::uint64_t replica = derive_seed(seed, i + 1);
    Examples shuffled = train;
    Rng rng(replica);
    rng.shuffle(std::span<std::uint8_t>(shuffled.y));
    rep.permuted_accuracies[i] =
        evaluate(train_forest(shuffled, params, derive_seed(replica, "model"), 1), test);
  });

  for (double a : rep.permuted_accuracies) rep.exceed_count += a >= rep.observed_accuracy;
  rep.p_value = static_cast<double>(rep.exceed_count + 1) / static_cast<double>(n_perm + 1);
  return rep;
}

}  // namespace mindprint::forest
