// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_STATS_HPP_
#define MINDPRINT_STATS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mindprint::stats {

enum class Method { kMannWhitneyU, kMannKendall, kKolmogorovSmirnov };

std::string_view method_name(Method method);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  Method method = Method::kMannWhitneyU;
  bool exact = false;
};

// Fraction of positions where predicted == actual. Throws DataError on a
// length mismatch or empty input.
double accuracy(std::span<const std::uint8_t> predicted,
                std::span<const std::uint8_t> actual);

// Midranks (1-based) of `values`; tied values share the mean of their ranks.
std::vector<double> midranks(std::span<const double> values);

// Two-sided Mann-Whitney U test. statistic is U for sample `a`:
// R_a - n_a(n_a+1)/2 with midranks. When n_a * n_b <= 400 the p-value comes
// from the exact permutation distribution of U given the observed ranks
// (ties included); otherwise from the tie-corrected normal approximation
// with continuity correction. If every value is identical p = 1.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kExactMannWhitneyLimit = 400;

// Mann-Kendall trend test. statistic is S = sum_{i<j} sign(x_j - x_i).
// Variance carries the tie correction; z = (S - sign(S)) / sqrt(var);
// two-sided normal p. S = 0 gives p = 1. Throws DataError for n < 4.
TestResult mann_kendall(std::span<const double> series);

// Variance of S under the null with ties grouped; exposed for tests.
double mann_kendall_variance(std::span<const double> series);

// One-sample Kolmogorov-Smirnov test against Uniform(0,1). statistic is D;
// the p-value uses the asymptotic Kolmogorov distribution with the
// Stephens small-sample correction.
TestResult ks_uniform(std::span<const double> sample);

// Standard normal upper tail, P(Z > z).
double normal_sf(double z);

}  // namespace mindprint::stats

#endif  // MINDPRINT_STATS_HPP_
