// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <deque>

#include "mindprint/error.hpp"
#include "mindprint/random.hpp"
#include "mindprint/siamese.hpp"

namespace mindprint::siamese {
namespace {

using Net = SiameseNetwork<double>;

std::vector<double> random_vec(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

TEST(Network, ParameterCount) {
  const Net net(20, 1);
  // 20*128+128 + 128*64+64 + 64*32+32 + 32+1
  EXPECT_EQ(net.parameters().size(), 2688u + 8256u + 2080u + 33u);
  EXPECT_EQ(Net(20, 1).parameters()[5], net.parameters()[5]);
}

TEST(Network, SymmetricExactly) {
  Rng rng(1);
  const SiameseNetwork<float> net(20, 3);
  for (int i = 0; i < 50; ++i) {
    std::vector<float> a(20), b(20);
    for (auto& x : a) x = static_cast<float>(rng.uniform(-2, 2));
    for (auto& x : b) x = static_cast<float>(rng.uniform(-2, 2));
    EXPECT_EQ(net.predict(a, b), net.predict(b, a));
    EXPECT_EQ(net.logit(a, b), net.logit(b, a));
  }
}

TEST(Network, IdenticalInputsGiveBiasOnly) {
  Rng rng(2);
  Net net(4, 9, {8, 6, 5});
  const double bias = net.parameters().back();
  for (int i = 0; i < 10; ++i) {
    const auto x = random_vec(rng, 4);
    EXPECT_EQ(net.logit(x, x), bias);
  }
}

TEST(Network, GradientMatchesFiniteDifference) {
  Rng rng(5);
  Net net(4, 11, {6, 5, 4});
  std::vector<std::vector<double>> x1, x2;
  const std::vector<int> labels{0, 1, 1};
  for (int i = 0; i < 3; ++i) {
    x1.push_back(random_vec(rng, 4));
    x2.push_back(random_vec(rng, 4));
  }
  auto total = [&](std::span<double> grad) {
    double s = 0;
    for (int i = 0; i < 3; ++i) s += net.loss(x1[i], x2[i], labels[i], grad);
    return s;
  };
  std::vector<double> grad(net.parameters().size(), 0.0);
  total(grad);
  const double h = 1e-6;
  int checked = 0;
  for (std::size_t p = 0; p < grad.size(); ++p) {
    const double keep = net.parameters()[p];
    net.parameters()[p] = keep + h;
    const double up = total({});
    net.parameters()[p] = keep - h;
    const double down = total({});
    net.parameters()[p] = keep;
    const double fd = (up - down) / (2 * h);
    if (std::abs(fd) < 1e-7 && std::abs(grad[p]) < 1e-7) continue;
    EXPECT_NEAR(grad[p], fd, 1e-4 * std::max(std::abs(fd), 1e-3)) << p;
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Network, LossIsStable) {
  Net net(2, 1, {2, 2, 2});
  net.parameters().back() = 800;  // huge bias
  const std::vector<double> a{0, 0};
  EXPECT_NEAR(net.loss(a, a, 1), 0.0, 1e-12);
  EXPECT_NEAR(net.loss(a, a, 0), 800.0, 1e-9);
}

// ---------------------------------------------------------------------------

struct Comments {
  std::deque<lexicon::FeatureVector> storage;
  std::vector<trajectory::UserComment> list;
  void add(corpus::Timestamp ts, double v) {
    storage.push_back(lexicon::FeatureVector{{v}, 1});
    list.push_back({ts, "c" + std::to_string(list.size()), &storage.back()});
  }
};

TEST(Pairs, QuadrupleHalvesByCount) {
  Comments c;
  for (int i = 0; i < 5; ++i) c.add(i, i);        // pre: 0..4 -> B1 {0,1,2}, B2 {3,4}
  for (int i = 10; i < 14; ++i) c.add(i, i);      // post: A1 {10,11}, A2 {12,13}
  const auto q = make_quadruple(c.list, 10, "u");
  ASSERT_TRUE(q.has_value());
  EXPECT_EQ(q->b1, (std::vector<double>{1.0}));
  EXPECT_EQ(q->b2, (std::vector<double>{3.5}));
  EXPECT_EQ(q->a1, (std::vector<double>{10.5}));
  EXPECT_EQ(q->a2, (std::vector<double>{12.5}));
  EXPECT_FALSE(make_quadruple(c.list, 1, "u").has_value());
  EXPECT_FALSE(make_quadruple(c.list, 13, "u").has_value());
}

TEST(Pairs, FourPerUser) {
  const std::vector<WindowQuadruple> qs{{"u", {1}, {2}, {3}, {4}}, {"v", {5}, {6}, {7}, {8}}};
  const auto set = build_pairs(qs);
  ASSERT_EQ(set.pairs.size(), 8u);
  int same = 0;
  for (const auto& p : set.pairs) same += p.label;
  EXPECT_EQ(same, 4);
  EXPECT_EQ(set.pairs[0].author, "u");
  for (const auto& p : set.pairs) {
    const bool pre1 = p.x1[0] == 1 || p.x1[0] == 2 || p.x1[0] == 5 || p.x1[0] == 6;
    const bool pre2 = p.x2[0] == 1 || p.x2[0] == 2 || p.x2[0] == 5 || p.x2[0] == 6;
    EXPECT_EQ(p.label, pre1 == pre2 ? 1 : 0);
  }
}

// ---------------------------------------------------------------------------

TrainOptions fast_options() {
  TrainOptions o;
  o.epochs = 60;
  o.learning_rate = 3e-3;
  o.widths = {16, 8, 8};
  return o;
}

std::vector<PairExample> synthetic_pairs(std::size_t users, std::size_t dim, double shift,
                                         std::uint64_t seed) {
  Rng rng(seed);
  std::vector<WindowQuadruple> qs;
  for (std::size_t u = 0; u < users; ++u) {
    WindowQuadruple q;
    q.author = "u" + std::to_string(u);
    auto base = random_vec(rng, dim);
    auto half = [&](double s) {
      std::vector<double> v(dim);
      for (std::size_t k = 0; k < dim; ++k) v[k] = base[k] + 0.3 * rng.uniform(-1, 1) + (k < 3 ? s : 0);
      return v;
    };
    q.b1 = half(0);
    q.b2 = half(0);
    q.a1 = half(shift);
    q.a2 = half(shift);
    qs.push_back(std::move(q));
  }
  return build_pairs(qs).pairs;
}

TEST(Training, LearnsSeparableShift) {
  const auto pairs = synthetic_pairs(150, 6, 2.0, 1);
  const auto r = train_siamese(pairs, fast_options(), 7);
  EXPECT_GT(r.test_metrics.accuracy, 0.95);
  EXPECT_EQ(r.loss_trace.size(), 60u);
  EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
}

TEST(Training, ChanceWithoutShift) {
  const auto pairs = synthetic_pairs(300, 6, 0.0, 2);
  const auto r = train_siamese(pairs, fast_options(), 7);
  EXPECT_NEAR(r.test_metrics.accuracy, 0.5, 0.1);
}

TEST(Training, DeterministicAndSerializable) {
  const auto pairs = synthetic_pairs(40, 4, 1.0, 3);
  auto o = fast_options();
  o.epochs = 5;
  const auto a = train_siamese(pairs, o, 9);
  const auto b = train_siamese(pairs, o, 9);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  const auto back = SiameseModel::from_json(a.model.to_json());
  for (const auto& p : a.test_pairs) EXPECT_EQ(back.predict(p.x1, p.x2), a.model.predict(p.x1, p.x2));
  const auto m = evaluate_siamese(back, a.test_pairs);
  EXPECT_EQ(m.accuracy, a.test_metrics.accuracy);
}

TEST(Training, Errors) {
  const auto pairs = synthetic_pairs(1, 4, 1.0, 3);
  EXPECT_THROW(train_siamese(std::span(pairs).subspan(0, 2), fast_options(), 1), DataError);
  auto o = fast_options();
  o.epochs = 0;
  EXPECT_THROW(o.validate(), ConfigError);
  o = fast_options();
  o.learning_rate = -1;
  EXPECT_THROW(o.validate(), ConfigError);
  const auto trained = train_siamese(synthetic_pairs(10, 4, 1.0, 4), fast_options(), 1);
  EXPECT_THROW(evaluate_siamese(trained.model, {}), DataError);
}

TEST(Metrics, ByHand) {
  const std::vector<std::uint8_t> pred{1, 1, 0, 0, 1}, truth{1, 0, 0, 1, 1};
  const auto m = confusion_metrics(pred, truth);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.tn, 1u);
  EXPECT_EQ(m.fn, 1u);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.6);
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  const std::vector<std::uint8_t> none{0, 0};
  EXPECT_EQ(confusion_metrics(none, std::vector<std::uint8_t>{1, 0}).precision, 0.0);
}

}  // namespace
}  // namespace mindprint::siamese
