// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include "mindprint/siamese.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "mindprint/error.hpp"

namespace mindprint::siamese {
namespace {

std::vector<double> mean_of(std::span<const trajectory::UserComment> part) {
  std::vector<const lexicon::FeatureVector*> vecs;
  for (const auto& c : part) vecs.push_back(c.features);
  return lexicon::aggregate_embeddings(std::span<const lexicon::FeatureVector* const>(vecs), {})
      .vector;
}

std::vector<float> standardize(std::span<const double> x, const std::vector<double>& mean,
                               const std::vector<double>& sd) {
  std::vector<float> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = static_cast<float>((x[k] - mean[k]) / sd[k]);
  }
  return out;
}

}  // namespace

std::optional<WindowQuadruple> make_quadruple(std::span<const trajectory::UserComment> comments,
                                              corpus::Timestamp tau, const std::string& author) {
  const auto pre = trajectory::pre_scope(comments, tau);
  const auto post = trajectory::post_scope(comments, tau);
  if (pre.size() < 2 || post.size() < 2) return std::nullopt;
  const std::size_t hp = (pre.size() + 1) / 2, ha = (post.size() + 1) / 2;
  const std::span<const trajectory::UserComment> p(pre), a(post);
  return WindowQuadruple{author, mean_of(p.first(hp)), mean_of(p.subspan(hp)),
                         mean_of(a.first(ha)), mean_of(a.subspan(ha))};
}

PairSet build_pairs(std::span<const WindowQuadruple> quadruples) {
  PairSet out;
  for (const auto& q : quadruples) {
    if (q.b1.empty() || q.b2.empty() || q.a1.empty() || q.a2.empty()) {
      ++out.skipped;
      continue;
    }
    out.pairs.push_back(PairExample{q.author, q.b1, q.a1, 0});
    out.pairs.push_back(PairExample{q.author, q.b2, q.a2, 0});
    out.pairs.push_back(PairExample{q.author, q.b1, q.b2, 1});
    out.pairs.push_back(PairExample{q.author, q.a1, q.a2, 1});
  }
  return out;
}

void TrainOptions::validate() const {
  if (epochs == 0) throw ConfigError("siamese epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("siamese learning rate must be positive");
  if (batch_size == 0) throw ConfigError("siamese batch size must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("siamese train fraction must lie in (0, 1)");
  }
  for (auto w : widths) {
    if (w == 0) throw ConfigError("siamese layer widths must be >= 1");
  }
}

double SiameseModel::predict(std::span<const double> x1, std::span<const double> x2) const {
  if (x1.size() != network.input_dim() || x2.size() != network.input_dim()) {
    throw DataError("pair width does not match the siamese model");
  }
  const auto s1 = standardize(x1, input_mean, input_std);
  const auto s2 = standardize(x2, input_mean, input_std);
  return network.predict(s1, s2);
}

std::string SiameseModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "mindprint-siamese";
  j["version"] = 1;
  j["input_dim"] = network.input_dim();
  const auto w = network.widths();
  j["widths"] = {w[0], w[1], w[2]};
  j["input_mean"] = input_mean;
  j["input_std"] = input_std;
  const auto p = network.parameters();
  j["parameters"] = std::vector<float>(p.begin(), p.end());
  return j.dump();
}

SiameseModel SiameseModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "mindprint-siamese") {
    throw DataError("not a siamese model document");
  }
  SiameseModel m;
  try {
    const auto w = j.at("widths").get<std::vector<std::size_t>>();
    if (w.size() != 3) throw DataError("siamese model needs three widths");
    m.network = SiameseNetwork<float>(j.at("input_dim").get<std::size_t>(), 0, {w[0], w[1], w[2]});
    m.input_mean = j.at("input_mean").get<std::vector<double>>();
    m.input_std = j.at("input_std").get<std::vector<double>>();
    const auto params = j.at("parameters").get<std::vector<float>>();
    auto dst = m.network.parameters();
    if (params.size() != dst.size()) throw DataError("siamese parameter count mismatch");
    std::copy(params.begin(), params.end(), dst.begin());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed siamese model: ") + e.what());
  }
  return m;
}

Metrics confusion_metrics(std::span<const std::uint8_t> predicted,
                          std::span<const std::uint8_t> actual) {
  if (predicted.size() != actual.size()) throw DataError("prediction/label length mismatch");
  if (actual.empty()) throw DataError("cannot evaluate an empty pair set");
  Metrics m;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (predicted[i] && actual[i]) ++m.tp;
    else if (predicted[i]) ++m.fp;
    else if (actual[i]) ++m.fn;
    else ++m.tn;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(actual.size());
  m.precision = m.tp + m.fp == 0 ? 0.0
                                 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  return m;
}

Metrics evaluate_siamese(const SiameseModel& model, std::span<const PairExample> pairs) {
  if (pairs.empty()) throw DataError("cannot evaluate an empty pair set");
  std::vector<std::uint8_t> pred, truth;
  for (const auto& p : pairs) {
    pred.push_back(model.predict(p.x1, p.x2) >= 0.5 ? 1 : 0);
    truth.push_back(p.label);
  }
  return confusion_metrics(pred, truth);
}

TrainResult train_siamese(std::span<const PairExample> pairs, const TrainOptions& options,
                          std::uint64_t seed) {
  options.validate();
  std::vector<std::size_t> by_label[2];
  for (std::size_t i = 0; i < pairs.size(); ++i) by_label[pairs[i].label ? 1 : 0].push_back(i);
  if (by_label[0].size() < 2 || by_label[1].size() < 2) {
    throw DataError("siamese training needs at least 2 pairs per class");
  }
  const std::size_t d = pairs.front().x1.size();
  for (const auto& p : pairs) {
    if (p.x1.size() != d || p.x2.size() != d) throw DataError("pairs differ in width");
  }

  Rng split_rng(derive_seed(seed, "split"));
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& idx : by_label) {
    split_rng.shuffle(std::span<std::size_t>(idx));
    const auto n_train = static_cast<std::size_t>(
        std::llround(options.train_fraction * static_cast<double>(idx.size())));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      (j < n_train ? train_idx : test_idx).push_back(idx[j]);
    }
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  TrainResult res;
  SiameseModel& model = res.model;
  model.input_mean.assign(d, 0.0);
  model.input_std.assign(d, 0.0);
  const double n_vec = 2.0 * static_cast<double>(train_idx.size());
  for (auto i : train_idx) {
    for (std::size_t k = 0; k < d; ++k) model.input_mean[k] += pairs[i].x1[k] + pairs[i].x2[k];
  }
  for (auto& m : model.input_mean) m /= n_vec;
  for (auto i : train_idx) {
    for (std::size_t k = 0; k < d; ++k) {
      const double a = pairs[i].x1[k] - model.input_mean[k];
      const double b = pairs[i].x2[k] - model.input_mean[k];
      model.input_std[k] += a * a + b * b;
    }
  }
  for (auto& s : model.input_std) {
    s = std::sqrt(s / n_vec);
    if (s == 0.0) s = 1.0;
  }

  std::vector<std::vector<float>> x1(train_idx.size()), x2(train_idx.size());
  std::vector<int> y(train_idx.size());
  for (std::size_t j = 0; j < train_idx.size(); ++j) {
    const auto& p = pairs[train_idx[j]];
    x1[j] = standardize(p.x1, model.input_mean, model.input_std);
    x2[j] = standardize(p.x2, model.input_mean, model.input_std);
    y[j] = p.label;
  }

  model.network = SiameseNetwork<float>(d, derive_seed(seed, "init"), options.widths);
  auto params = model.network.parameters();
  const std::size_t n_params = params.size();
  std::vector<float> grad(n_params), m1(n_params, 0.0f), m2(n_params, 0.0f);
  const float lr = static_cast<float>(options.learning_rate);
  constexpr float kBeta1 = 0.9f, kBeta2 = 0.999f, kEps = 1e-8f;
  double beta1_t = 1.0, beta2_t = 1.0;

  Rng order_rng(derive_seed(seed, "batches"));
  std::vector<std::size_t> order(train_idx.size());
  for (std::size_t e = 0; e < options.epochs; ++e) {
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    order_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0f);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t j = order[b];
        epoch_loss += model.network.loss(x1[j], x2[j], y[j], grad);
      }
      const float scale = 1.0f / static_cast<float>(end - start);
      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      const auto c1 = static_cast<float>(1.0 - beta1_t);
      const auto c2 = static_cast<float>(1.0 - beta2_t);
      for (std::size_t k = 0; k < n_params; ++k) {
        const float g = grad[k] * scale;
        m1[k] = kBeta1 * m1[k] + (1.0f - kBeta1) * g;
        m2[k] = kBeta2 * m2[k] + (1.0f - kBeta2) * g * g;
        params[k] -= lr * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + kEps);
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) {
      throw DataError("siamese training diverged at epoch " + std::to_string(e + 1));
    }
    res.loss_trace.push_back(epoch_loss);
  }

  for (auto i : test_idx) res.test_pairs.push_back(pairs[i]);
  res.test_metrics = evaluate_siamese(model, res.test_pairs);
  return res;
}

}  // namespace mindprint::siamese
