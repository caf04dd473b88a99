// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_SIAMESE_HPP_
#define MINDPRINT_SIAMESE_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mindprint/random.hpp"
#include "mindprint/trajectory.hpp"

namespace mindprint::siamese {

// Shared encoder D -> w0 -> ReLU -> w1 -> ReLU -> w2, then a dense 1-unit
// head over |enc(x1) - enc(x2)| and a sigmoid. All parameters live in one
// flat array: for each of the four layers the row-major weights followed
// by the bias.
template <class Real>
class SiameseNetwork {
 public:
  using Widths = std::array<std::size_t, 3>;
  static constexpr Widths kDefaultWidths{128, 64, 32};

  SiameseNetwork() = default;
  SiameseNetwork(std::size_t input_dim, std::uint64_t seed, Widths widths = kDefaultWidths);

  std::size_t input_dim() const { return dims_[0]; }
  const Widths widths() const { return {dims_[1], dims_[2], dims_[3]}; }
  std::span<Real> parameters() { return params_; }
  std::span<const Real> parameters() const { return params_; }

  // Head pre-activation and probability.
  Real logit(std::span<const Real> x1, std::span<const Real> x2) const;
  Real predict(std::span<const Real> x1, std::span<const Real> x2) const {
    return sigmoid(logit(x1, x2));
  }

  // Binary cross-entropy of one pair. When `grad` is non-empty the
  // parameter gradient of the loss is added to it.
  Real loss(std::span<const Real> x1, std::span<const Real> x2, int label,
            std::span<Real> grad = {}) const;

  static Real sigmoid(Real z) {
    return z >= 0 ? Real(1) / (Real(1) + std::exp(-z)) : std::exp(z) / (Real(1) + std::exp(z));
  }

 private:
  struct Trace {
    std::vector<Real> z1, a1, z2, a2, e;
  };
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + dims_[layer + 1] * dims_[layer];
  }
  void dense(std::size_t layer, std::span<const Real> in, std::vector<Real>& out) const;
  void encode(std::span<const Real> x, Trace& t) const;
  void backward_encoder(std::span<const Real> x, const Trace& t, std::span<const Real> de,
                        std::span<Real> grad) const;

  // dims_[0] = D, then the three widths, then 1 for the head.
  std::array<std::size_t, 5> dims_{};
  std::array<std::size_t, 4> offsets_{};
  std::vector<Real> params_;
};

// ---------------------------------------------------------------------------

template <class Real>
SiameseNetwork<Real>::SiameseNetwork(std::size_t input_dim, std::uint64_t seed, Widths widths)
    : dims_{input_dim, widths[0], widths[1], widths[2], 1} {
  std::size_t total = 0;
  for (std::size_t l = 0; l < 4; ++l) {
    offsets_[l] = total;
    total += dims_[l + 1] * dims_[l] + dims_[l + 1];
  }
  params_.assign(total, Real(0));
  Rng rng(seed);
  for (std::size_t l = 0; l < 4; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    for (std::size_t i = 0; i < dims_[l + 1] * dims_[l]; ++i) {
      params_[offsets_[l] + i] = static_cast<Real>(rng.uniform(-bound, bound));
    }
    for (std::size_t i = 0; i < dims_[l + 1]; ++i) {
      params_[bias_offset(l) + i] = static_cast<Real>(rng.uniform(-bound, bound));
    }
  }
}

template <class Real>
void SiameseNetwork<Real>::dense(std::size_t layer, std::span<const Real> in,
                                 std::vector<Real>& out) const {
  const std::size_t n_in = dims_[layer], n_out = dims_[layer + 1];
  const Real* w = params_.data() + weight_offset(layer);
  const Real* b = params_.data() + bias_offset(layer);
  out.resize(n_out);
  for (std::size_t o = 0; o < n_out; ++o) {
    Real s = b[o];
    const Real* row = w + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) s += row[i] * in[i];
    out[o] = s;
  }
}

template <class Real>
void SiameseNetwork<Real>::encode(std::span<const Real> x, Trace& t) const {
  dense(0, x, t.z1);
  t.a1.resize(t.z1.size());
  for (std::size_t i = 0; i < t.z1.size(); ++i) t.a1[i] = t.z1[i] > 0 ? t.z1[i] : Real(0);
  dense(1, t.a1, t.z2);
  t.a2.resize(t.z2.size());
  for (std::size_t i = 0; i < t.z2.size(); ++i) t.a2[i] = t.z2[i] > 0 ? t.z2[i] : Real(0);
  dense(2, t.a2, t.e);
}

template <class Real>
Real SiameseNetwork<Real>::logit(std::span<const Real> x1, std::span<const Real> x2) const {
  Trace t1, t2;
  encode(x1, t1);
  encode(x2, t2);
  const Real* w = params_.data() + weight_offset(3);
  Real z = params_[bias_offset(3)];
  for (std::size_t k = 0; k < t1.e.size(); ++k) z += w[k] * std::abs(t1.e[k] - t2.e[k]);
  return z;
}

template <class Real>
void SiameseNetwork<Real>::backward_encoder(std::span<const Real> x, const Trace& t,
                                            std::span<const Real> de,
                                            std::span<Real> grad) const {
  // Layer 3 (linear).
  std::vector<Real> da2(dims_[2], Real(0));
  {
    const std::size_t n_in = dims_[2], n_out = dims_[3];
    const Real* w = params_.data() + weight_offset(2);
    Real* gw = grad.data() + weight_offset(2);
    Real* gb = grad.data() + bias_offset(2);
    for (std::size_t o = 0; o < n_out; ++o) {
      gb[o] += de[o];
      for (std::size_t i = 0; i < n_in; ++i) {
        gw[o * n_in + i] += de[o] * t.a2[i];
        da2[i] += de[o] * w[o * n_in + i];
      }
    }
  }
  std::vector<Real> da1(dims_[1], Real(0));
  {
    const std::size_t n_in = dims_[1], n_out = dims_[2];
    const Real* w = params_.data() + weight_offset(1);
    Real* gw = grad.data() + weight_offset(1);
    Real* gb = grad.data() + bias_offset(1);
    for (std::size_t o = 0; o < n_out; ++o) {
      if (t.z2[o] <= 0) continue;
      const Real dz = da2[o];
      gb[o] += dz;
      for (std::size_t i = 0; i < n_in; ++i) {
        gw[o * n_in + i] += dz * t.a1[i];
        da1[i] += dz * w[o * n_in + i];
      }
    }
  }
  {
    const std::size_t n_in = dims_[0], n_out = dims_[1];
    Real* gw = grad.data() + weight_offset(0);
    Real* gb = grad.data() + bias_offset(0);
    for (std::size_t o = 0; o < n_out; ++o) {
      if (t.z1[o] <= 0) continue;
      const Real dz = da1[o];
      gb[o] += dz;
      for (std::size_t i = 0; i < n_in; ++i) gw[o * n_in + i] += dz * x[i];
    }
  }
}

template <class Real>
Real SiameseNetwork<Real>::loss(std::span<const Real> x1, std::span<const Real> x2, int label,
                                std::span<Real> grad) const {
  Trace t1, t2;
  encode(x1, t1);
  encode(x2, t2);
  const std::size_t k_dim = dims_[3];
  const Real* wh = params_.data() + weight_offset(3);
  std::vector<Real> diff(k_dim);
  Real z = params_[bias_offset(3)];
  for (std::size_t k = 0; k < k_dim; ++k) {
    diff[k] = t1.e[k] - t2.e[k];
    z += wh[k] * std::abs(diff[k]);
  }
  // softplus(z) - y z, computed without overflow.
  const Real y = static_cast<Real>(label);
  const Real softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  const Real value = softplus - y * z;
  if (grad.empty()) return value;

  const Real dz = sigmoid(z) - y;
  Real* gh = grad.data() + weight_offset(3);
  grad[bias_offset(3)] += dz;
  std::vector<Real> de1(k_dim), de2(k_dim);
  for (std::size_t k = 0; k < k_dim; ++k) {
    gh[k] += dz * std::abs(diff[k]);
    const Real s = diff[k] > 0 ? Real(1) : (diff[k] < 0 ? Real(-1) : Real(0));
    de1[k] = dz * wh[k] * s;
    de2[k] = -de1[k];
  }
  backward_encoder(x1, t1, de1, grad);
  backward_encoder(x2, t2, de2, grad);
  return value;
}

// ---------------------------------------------------------------------------
// Pairs
// ---------------------------------------------------------------------------

// First and second halves of pre-engagement (B1, B2) and post-engagement
// (A1, A2) activity of one user.
struct WindowQuadruple {
  std::string author;
  std::vector<double> b1, b2, a1, a2;
};

// Splits each period by comment count, the first half taking ceil(n/2)
// comments. Returns nullopt if either period has fewer than 2 comments.
std::optional<WindowQuadruple> make_quadruple(std::span<const trajectory::UserComment> comments,
                                              corpus::Timestamp tau, const std::string& author);

struct PairExample {
  std::string author;
  std::vector<double> x1;
  std::vector<double> x2;
  std::uint8_t label = 0;  // 1 = same side of tau
};

struct PairSet {
  std::vector<PairExample> pairs;
  std::size_t skipped = 0;  // quadruples with a missing half
};

// Per user: (B1,A1) and (B2,A2) labeled 0, (B1,B2) and (A1,A2) labeled 1.
PairSet build_pairs(std::span<const WindowQuadruple> quadruples);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainOptions {
  std::size_t epochs = 300;
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  double train_fraction = 0.8;
  SiameseNetwork<float>::Widths widths = SiameseNetwork<float>::kDefaultWidths;

  void validate() const;
};

// Network plus the input standardization fitted on the training pairs.
struct SiameseModel {
  SiameseNetwork<float> network;
  std::vector<double> input_mean;
  std::vector<double> input_std;

  double predict(std::span<const double> x1, std::span<const double> x2) const;
  std::string to_json() const;
  static SiameseModel from_json(const std::string& text);
};

struct Metrics {
  double accuracy = 0.0;
  // Precision of the "same side" class; 0 when nothing is predicted
  // positive.
  double precision = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct TrainResult {
  SiameseModel model;
  std::vector<double> loss_trace;  // mean training loss per epoch
  std::vector<PairExample> test_pairs;
  Metrics test_metrics;
};

// Adam on binary cross-entropy. Pairs are split 80/20 stratified by label,
// batches follow a per-epoch seeded shuffle. Throws DataError with fewer
// than 2 pairs per class or when the loss becomes NaN (naming the epoch).
TrainResult train_siamese(std::span<const PairExample> pairs, const TrainOptions& options,
                          std::uint64_t seed);

// Thresholds the output at 0.5. Throws DataError on an empty pair set.
Metrics evaluate_siamese(const SiameseModel& model, std::span<const PairExample> pairs);

// Metrics from predicted and true labels.
Metrics confusion_metrics(std::span<const std::uint8_t> predicted,
                          std::span<const std::uint8_t> actual);

}  // namespace mindprint::siamese

#endif  // MINDPRINT_SIAMESE_HPP_
