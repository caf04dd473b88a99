// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "mindprint/forest.hpp"
#include "mindprint/random.hpp"

namespace mindprint {
namespace {

Examples data(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Examples ex;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(dim);
    for (auto& v : row) v = rng.uniform(0, 1);
    const std::uint8_t y = i % 2;
    row[0] += 0.4 * y;
    ex.x.append_row(row);
    ex.y.push_back(y);
  }
  return ex;
}

void BM_TrainForest(benchmark::State& state) {
  const auto ex = data(static_cast<std::size_t>(state.range(0)), 20, 1);
  forest::HyperParams hp;
  hp.n_trees = 100;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(forest::train_forest(ex, hp, seed++));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_TrainForest)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto ex = data(1000, 20, 2);
  forest::HyperParams hp;
  hp.n_trees = 100;
  const auto model = forest::train_forest(ex, hp, 3);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(ex.x.row(i++ % ex.size())));
}
BENCHMARK(BM_Predict);

void BM_PermutationTest(benchmark::State& state) {
  const auto train = data(200, 20, 4), test = data(50, 20, 5);
  forest::HyperParams hp;
  hp.n_trees = 50;
  for (auto _ : state) benchmark::DoNotOptimize(forest::permutation_test(train, test, hp, 10, 6));
}
BENCHMARK(BM_PermutationTest)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace mindprint
