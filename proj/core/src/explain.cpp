// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include "mindprint/explain.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"
#include "mindprint/parallel.hpp"
#include "mindprint/random.hpp"

namespace mindprint::explain {
namespace {

struct PathElement {
  std::int64_t feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, std::size_t depth, double zero_fraction,
                 double one_fraction, std::int64_t feature) {
  path[depth] = PathElement{feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (std::size_t i = depth; i-- > 0;) {
    path[i + 1].pweight += one_fraction * path[i].pweight * static_cast<double>(i + 1) /
                           static_cast<double>(depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * static_cast<double>(depth - i) /
                      static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, std::size_t depth, std::size_t index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one = path[depth].pweight;
  for (std::size_t i = depth; i-- > 0;) {
    if (one != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one * static_cast<double>(depth + 1) /
                        (static_cast<double>(i + 1) * one);
      next_one = tmp - path[i].pweight * zero * static_cast<double>(depth - i) /
                           static_cast<double>(depth + 1);
    } else {
      path[i].pweight = path[i].pweight * static_cast<double>(depth + 1) /
                        (zero * static_cast<double>(depth - i));
    }
  }
  for (std::size_t i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, std::size_t depth, std::size_t index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one = path[depth].pweight;
  double total = 0.0;
  for (std::size_t i = depth; i-- > 0;) {
    if (one != 0.0) {
      const double tmp = next_one * static_cast<double>(depth + 1) /
                         (static_cast<double>(i + 1) * one);
      total += tmp;
      next_one = path[i].pweight - tmp * zero * static_cast<double>(depth - i) /
                                       static_cast<double>(depth + 1);
    } else if (zero != 0.0) {
      total += path[i].pweight / zero * static_cast<double>(depth + 1) /
               static_cast<double>(depth - i);
    }
  }
  return total;
}

class ShapWalker {
 public:
  ShapWalker(const forest::Tree& tree, std::span<const double> x, std::span<double> phi)
      : tree_(tree), x_(x), phi_(phi) {
    const std::size_t d = tree.depth() + 2;
    buffer_.resize(d * (d + 1) / 2 + d);
  }

  void run() { recurse(0, buffer_.data(), 0, 1.0, 1.0, -1); }

 private:
  void recurse(std::int32_t node_id, PathElement* parent_path, std::size_t depth,
               double zero_fraction, double one_fraction, std::int64_t feature) {
    // Each level works on its own copy of the path, placed after the parent's.
    PathElement* path = parent_path + depth;
    if (depth > 0) std::copy(parent_path, parent_path + depth, path);
    extend_path(path, depth, zero_fraction, one_fraction, feature);

    const forest::TreeNode& node = tree_.nodes[static_cast<std::size_t>(node_id)];
    if (node.is_leaf()) {
      const double value = node.majority();
      if (value == 0.0) return;
      for (std::size_t i = 1; i <= depth; ++i) {
        const double w = unwound_path_sum(path, depth, i);
        const PathElement& el = path[i];
        phi_[static_cast<std::size_t>(el.feature)] +=
            w * (el.one_fraction - el.zero_fraction) * value;
      }
      return;
    }

    const auto f = static_cast<std::size_t>(node.feature);
    const bool go_left = x_[f] <= node.threshold;
    const std::int32_t hot = go_left ? node.left : node.right;
    const std::int32_t cold = go_left ? node.right : node.left;
    const double cover = node.cover();
    const double hot_zero = tree_.nodes[static_cast<std::size_t>(hot)].cover() / cover;
    const double cold_zero = tree_.nodes[static_cast<std::size_t>(cold)].cover() / cover;

    double incoming_zero = 1.0, incoming_one = 1.0;
    std::size_t index = 1;
    for (; index <= depth; ++index) {
      if (path[index].feature == node.feature) break;
    }
    if (index <= depth) {
      incoming_zero = path[index].zero_fraction;
      incoming_one = path[index].one_fraction;
      unwind_path(path, depth, index);
      --depth;
    }
    recurse(hot, path, depth + 1, hot_zero * incoming_zero, incoming_one, node.feature);
    recurse(cold, path, depth + 1, cold_zero * incoming_zero, 0.0, node.feature);
  }

  const forest::Tree& tree_;
  std::span<const double> x_;
  std::span<double> phi_;
  std::vector<PathElement> buffer_;
};

void tree_shap_into(const forest::Tree& tree, std::span<const double> x, std::span<double> phi) {
  ShapWalker(tree, x, phi).run();
}

}  // namespace

std::vector<double> tree_shap(const forest::Tree& tree, std::span<const double> x,
                              std::size_t dimension) {
  if (x.size() != dimension) {
    throw DataError("instance has " + std::to_string(x.size()) + " features, expected " +
                    std::to_string(dimension));
  }
  std::vector<double> phi(dimension, 0.0);
  tree_shap_into(tree, x, phi);
  return phi;
}

std::vector<double> tree_shap(const forest::ForestModel& model, std::span<const double> x) {
  if (x.size() != model.dimension) {
    throw DataError("instance has " + std::to_string(x.size()) + " features, model expects " +
                    std::to_string(model.dimension));
  }
  std::vector<double> phi(model.dimension, 0.0);
  for (const auto& t : model.trees) tree_shap_into(t, x, phi);
  for (auto& v : phi) v /= static_cast<double>(model.trees.size());
  return phi;
}

double base_value(const forest::Tree& tree) {
  double total = 0.0;
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) total += static_cast<double>(n.cover()) * n.majority();
  }
  return total / static_cast<double>(tree.nodes[0].cover());
}

double base_value(const forest::ForestModel& model) {
  double total = 0.0;
  for (const auto& t : model.trees) total += base_value(t);
  return total / static_cast<double>(model.trees.size());
}

ImportanceVector importance_vector(const forest::ForestModel& model, const Matrix& positives,
                                   std::size_t sample_size, std::uint64_t seed,
                                   std::size_t workers) {
  const std::size_t n = positives.rows();
  if (n == 0) throw DataError("importance vector needs at least one positive instance");
  if (positives.cols() != model.dimension) {
    throw DataError("positives have " + std::to_string(positives.cols()) +
                    " features, model expects " + std::to_string(model.dimension));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t take = std::min(sample_size, n);
  if (take < n) {
    Rng rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(idx[i], idx[i + rng.uniform_index(n - i)]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
  }

  std::vector<std::vector<double>> per(take);
  parallel_for(take, workers, [&](std::size_t i) { per[i] = tree_shap(model, positives.row(idx[i])); });

  ImportanceVector out;
  out.values.assign(model.dimension, 0.0);
  out.n_instances = take;
  for (const auto& phi : per) {
    for (std::size_t k = 0; k < phi.size(); ++k) out.values[k] += std::abs(phi[k]);
  }
  for (auto& v : out.values) v /= static_cast<double>(take);
  return out;
}

Matrix cosine_similarity_matrix(std::span<const ImportanceVector> vectors) {
  const std::size_t n = vectors.size();
  std::vector<long double> norm(n, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    if (vectors[i].values.size() != vectors[0].values.size()) {
      throw DataError("importance vector of '" + vectors[i].community + "' has width " +
                      std::to_string(vectors[i].values.size()) + ", expected " +
                      std::to_string(vectors[0].values.size()));
    }
    for (double v : vectors[i].values) norm[i] += static_cast<long double>(v) * v;
    if (norm[i] == 0.0L) {
      throw DataError("importance vector of '" + vectors[i].community + "' is all zero");
    }
    norm[i] = std::sqrt(norm[i]);
  }
  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    sim(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      long double dot = 0.0L;
      const auto& a = vectors[i].values;
      const auto& b = vectors[j].values;
      for (std::size_t k = 0; k < a.size(); ++k) dot += static_cast<long double>(a[k]) * b[k];
      const double c = static_cast<double>(std::clamp(dot / (norm[i] * norm[j]), -1.0L, 1.0L));
      sim(i, j) = c;
      sim(j, i) = c;
    }
  }
  return sim;
}

Matrix cosine_distance(const Matrix& similarity) {
  Matrix d(similarity.rows(), similarity.cols());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) d(i, j) = i == j ? 0.0 : 1.0 - similarity(i, j);
  }
  return d;
}

// ---------------------------------------------------------------------------

Dendrogram upgma(const Matrix& distance, std::span<const std::string> labels) {
  const std::size_t n = labels.size();
  if (n < 2) throw DataError("clustering needs at least 2 items");
  if (distance.rows() != n || distance.cols() != n) {
    throw DataError("distance matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  Dendrogram out;
  out.labels.assign(labels.begin(), labels.end());

  // Active clusters by id; dist indexed by id.
  const std::size_t total = 2 * n - 1;
  std::vector<std::vector<double>> dist(total, std::vector<double>(total, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist[i][j] = distance(i, j);
  }
  std::vector<std::size_t> size(total, 1);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> children(total, {total, total});

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        const double d = dist[active[i]][active[j]];
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    const std::size_t a = active[bi], b = active[bj], c = n + step;
    size[c] = size[a] + size[b];
    children[c] = {a, b};
    out.merges.push_back(Merge{a, b, best, size[c]});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
    for (std::size_t o : active) {
      const double d = (static_cast<double>(size[a]) * dist[a][o] +
                        static_cast<double>(size[b]) * dist[b][o]) /
                       static_cast<double>(size[c]);
      dist[c][o] = d;
      dist[o][c] = d;
    }
    active.push_back(c);
  }

  std::vector<std::size_t> stack{total - 1};
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    if (id < n) {
      out.leaf_order.push_back(id);
    } else {
      stack.push_back(children[id].second);
      stack.push_back(children[id].first);
    }
  }
  return out;
}

std::string Dendrogram::newick() const {
  const std::size_t n = labels.size();
  auto height = [&](std::size_t id) { return id < n ? 0.0 : merges[id - n].height / 2.0; };
  auto quote = [](const std::string& s) {
    if (s.find_first_of(" ():;,[]'\t") == std::string::npos) return s;
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("''") : std::string(1, c);
    return q + "'";
  };
  std::function<std::string(std::size_t)> render = [&](std::size_t id) -> std::string {
    if (id < n) return quote(labels[id]);
    const Merge& m = merges[id - n];
    const double h = height(id);
    return "(" + render(m.a) + ":" + format_double(h - height(m.a)) + "," + render(m.b) + ":" +
           format_double(h - height(m.b)) + ")";
  };
  return render(n + merges.size() - 1) + ";";
}

std::string Dendrogram::to_json() const {
  nlohmann::ordered_json j;
  j["labels"] = labels;
  j["merges"] = nlohmann::ordered_json::array();
  for (const auto& m : merges) {
    j["merges"].push_back({{"a", m.a}, {"b", m.b}, {"height", m.height}, {"size", m.size}});
  }
  j["leaf_order"] = leaf_order;
  j["newick"] = newick();
  return j.dump(2);
}

// ---------------------------------------------------------------------------

PcaResult pca_project(const Matrix& vectors, std::size_t k) {
  const std::size_t n = vectors.rows(), d = vectors.cols();
  if (n < 2) throw DataError("PCA needs at least 2 rows");
  if (k == 0 || k > std::min(n - 1, d)) {
    throw DataError("PCA: k = " + std::to_string(k) + " exceeds min(n-1, D) = " +
                    std::to_string(std::min(n - 1, d)));
  }
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = vectors(i, j);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DataError("PCA eigendecomposition failed");

  PcaResult res;
  res.coordinates = Matrix(n, k);
  res.components = Matrix(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    const auto col = static_cast<Eigen::Index>(d - 1 - c);  // eigenvalues ascend
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    res.explained_variance.push_back(solver.eigenvalues()(col));
    for (std::size_t j = 0; j < d; ++j) res.components(c, j) = v(static_cast<Eigen::Index>(j));
    const Eigen::VectorXd proj = x * v;
    for (std::size_t i = 0; i < n; ++i) res.coordinates(i, c) = proj(static_cast<Eigen::Index>(i));
  }
  return res;
}

// ---------------------------------------------------------------------------

void write_importance_csv(const std::filesystem::path& path,
                          std::span<const ImportanceVector> vectors) {
  std::ostringstream out;
  const std::size_t d = vectors.empty() ? 0 : vectors[0].values.size();
  std::vector<std::string> fields{"community", "n_instances"};
  for (std::size_t k = 0; k < d; ++k) fields.push_back("f_" + std::to_string(k + 1));
  write_csv_row(out, fields);
  for (const auto& v : vectors) {
    fields = {v.community, std::to_string(v.n_instances)};
    for (double x : v.values) fields.push_back(format_double(x));
    write_csv_row(out, fields);
  }
  write_text_file(path, out.str());
}

std::vector<ImportanceVector> read_importance_csv(const std::filesystem::path& path) {
  const auto table = read_csv_file(path);
  const auto c = table.column("community"), n = table.column("n_instances");
  std::vector<ImportanceVector> out;
  for (const auto& row : table.rows) {
    ImportanceVector v;
    v.community = row[c];
    v.n_instances = static_cast<std::size_t>(parse_int(row[n]));
    for (std::size_t k = 2; k < row.size(); ++k) v.values.push_back(parse_double(row[k]));
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace mindprint::explain
