// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include "mindprint/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "mindprint/error.hpp"

namespace mindprint::stats {
namespace {

// Sizes of tie groups in `values`.
std::vector<std::size_t> tie_groups(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> groups;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    groups.push_back(j - i);
    i = j;
  }
  return groups;
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kMannWhitneyU:
      return "mann_whitney_u";
    case Method::kMannKendall:
      return "mann_kendall";
    case Method::kKolmogorovSmirnov:
      return "ks_uniform";
  }
  return "unknown";
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double accuracy(std::span<const std::uint8_t> predicted,
                std::span<const std::uint8_t> actual) {
  if (predicted.size() != actual.size()) {
    throw DataError("accuracy: " + std::to_string(predicted.size()) +
                    " predictions for " + std::to_string(actual.size()) + " labels");
  }
  if (predicted.empty()) throw DataError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) hits += predicted[i] == actual[i];
  return static_cast<double>(hits) / static_cast<double>(actual.size());
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("mann_whitney_u: both samples must be non-empty");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const double ra = std::accumulate(ranks.begin(), ranks.begin() + na, 0.0);
  const double u = ra - 0.5 * static_cast<double>(na * (na + 1));

  TestResult res;
  res.statistic = u;
  res.n_a = na;
  res.n_b = nb;
  res.method = Method::kMannWhitneyU;

  const auto groups = tie_groups(pooled);
  if (groups.size() == 1) {
    res.p_value = 1.0;
    res.exact = true;
    return res;
  }

  if (na * nb <= kExactMannWhitneyLimit) {
    // Doubled midranks are integers; count size-na subsets by doubled sum.
    std::vector<std::int64_t> r2(n);
    for (std::size_t i = 0; i < n; ++i) r2[i] = std::llround(2.0 * ranks[i]);
    const std::int64_t total = std::accumulate(r2.begin(), r2.end(), std::int64_t{0});
    std::vector<std::vector<std::uint64_t>> dp(
        na + 1, std::vector<std::uint64_t>(static_cast<std::size_t>(total) + 1, 0));
    dp[0][0] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t top = std::min(na, i + 1);
      for (std::size_t k = top; k >= 1; --k) {
        auto& cur = dp[k];
        const auto& prev = dp[k - 1];
        for (std::int64_t s = total; s >= r2[i]; --s) {
          cur[s] += prev[s - r2[i]];
        }
      }
    }
    // 2U = 2R - na(na+1); null mean of 2U is na*nb.
    const auto offset = static_cast<std::int64_t>(na * (na + 1));
    const auto center = static_cast<std::int64_t>(na * nb);
    const std::int64_t obs_r2 = std::accumulate(r2.begin(), r2.begin() + na, std::int64_t{0});
    const std::int64_t obs_dev = std::llabs(obs_r2 - offset - center);
    long double extreme = 0, all = 0;
    for (std::int64_t s = 0; s <= total; ++s) {
      const auto c = dp[na][s];
      if (c == 0) continue;
      all += c;
      if (std::llabs(s - offset - center) >= obs_dev) extreme += c;
    }
    res.p_value = static_cast<double>(extreme / all);
    res.exact = true;
    return res;
  }

  double tie_term = 0.0;
  for (auto t : groups) {
    const double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  const double nd = static_cast<double>(n);
  const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                     ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
  const double mean = 0.5 * static_cast<double>(na) * static_cast<double>(nb);
  const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(var);
  res.p_value = std::min(1.0, 2.0 * normal_sf(z));
  return res;
}

double mann_kendall_variance(std::span<const double> series) {
  const double n = static_cast<double>(series.size());
  double var = n * (n - 1.0) * (2.0 * n + 5.0);
  for (auto t : tie_groups(series)) {
    const double td = static_cast<double>(t);
    var -= td * (td - 1.0) * (2.0 * td + 5.0);
  }
  return var / 18.0;
}

TestResult mann_kendall(std::span<const double> series) {
  if (series.size() < 4) {
    throw DataError("mann_kendall: need at least 4 points, got " +
                    std::to_string(series.size()));
  }
  long long s = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (std::size_t j = i + 1; j < series.size(); ++j) s += sign(series[j] - series[i]);
  }
  TestResult res;
  res.statistic = static_cast<double>(s);
  res.n_a = series.size();
  res.method = Method::kMannKendall;
  const double var = mann_kendall_variance(series);
  if (s == 0 || var <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  const double z = (static_cast<double>(s) - (s > 0 ? 1.0 : -1.0)) / std::sqrt(var);
  res.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
  return res;
}

TestResult ks_uniform(std::span<const double> sample) {
  if (sample.empty()) throw DataError("ks_uniform: empty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double cdf = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  const double sq = std::sqrt(n);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  double p = 0.0;
  if (lambda < 0.2) {
    p = 1.0;
  } else {
    double term_sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = term_sign * std::exp(-2.0 * k * k * lambda * lambda);
      p += term;
      if (std::abs(term) < 1e-12) break;
      term_sign = -term_sign;
    }
    p = std::clamp(2.0 * p, 0.0, 1.0);
  }
  TestResult res;
  res.statistic = d;
  res.p_value = p;
  res.n_a = x.size();
  res.method = Method::kKolmogorovSmirnov;
  return res;
}

}  // namespace mindprint::stats
