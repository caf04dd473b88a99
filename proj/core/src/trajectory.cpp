// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include "mindprint/trajectory.hpp"

#include <algorithm>

#include "mindprint/error.hpp"

namespace mindprint::trajectory {
namespace {

bool earlier(const UserComment& a, const UserComment& b) {
  return a.ts != b.ts ? a.ts < b.ts : a.id < b.id;
}

}  // namespace

double temporal_position(Timestamp t, Timestamp user_first_ts, Timestamp tau) {
  if (tau <= user_first_ts) {
    throw DataError("degenerate user: engagement time does not follow the first comment");
  }
  if (t < user_first_ts || t > tau) {
    throw DataError("comment time " + std::to_string(t) + " outside [" +
                    std::to_string(user_first_ts) + ", " + std::to_string(tau) + "]");
  }
  return static_cast<double>(t - user_first_ts) / static_cast<double>(tau - user_first_ts);
}

double cumulative_position(std::size_t ordinal_before, std::size_t total) {
  if (total == 0) throw DataError("cumulative position with zero comments");
  if (ordinal_before >= total) {
    throw DataError("ordinal " + std::to_string(ordinal_before) + " out of range for " +
                    std::to_string(total) + " comments");
  }
  return static_cast<double>(ordinal_before) / static_cast<double>(total);
}

WindowSpec WindowSpec::even(WindowKind kind, std::size_t count) {
  if (count == 0) throw ConfigError("window count must be >= 1");
  WindowSpec spec;
  spec.kind = kind;
  spec.edges.resize(count + 1);
  for (std::size_t i = 0; i <= count; ++i) {
    spec.edges[i] = static_cast<double>(i) / static_cast<double>(count);
  }
  return spec;
}

void WindowSpec::validate() const {
  if (edges.size() < 2 || edges.front() != 0.0 || edges.back() != 1.0) {
    throw ConfigError("window edges must run from 0 to 1");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw ConfigError("window edges must increase strictly");
  }
}

std::size_t WindowSpec::window_of(double position) const {
  if (!(position >= 0.0 && position <= 1.0)) {
    throw DataError("activity position " + std::to_string(position) + " outside [0,1]");
  }
  const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, position);
  return static_cast<std::size_t>(it - (edges.begin() + 1));
}

std::string WindowSpec::tag(std::size_t window) const {
  return std::string(kind == WindowKind::kTemporal ? "T" : "N") + "-w" +
         std::to_string(window + 1);
}

std::vector<UserComment> pre_scope(std::span<const UserComment> comments, Timestamp tau) {
  std::vector<UserComment> out;
  for (const auto& c : comments) {
    if (c.ts < tau) out.push_back(c);
  }
  std::sort(out.begin(), out.end(), earlier);
  return out;
}

std::vector<UserComment> post_scope(std::span<const UserComment> comments, Timestamp tau) {
  std::vector<UserComment> out;
  for (const auto& c : comments) {
    if (c.ts >= tau) out.push_back(c);
  }
  std::sort(out.begin(), out.end(), earlier);
  return out;
}

std::vector<double> activity_positions(std::span<const UserComment> comments, Timestamp tau,
                                       WindowKind kind) {
  const auto pre = pre_scope(comments, tau);
  std::vector<double> pos(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    pos[i] = kind == WindowKind::kTemporal ? temporal_position(pre[i].ts, pre.front().ts, tau)
                                           : cumulative_position(i, pre.size());
  }
  return pos;
}

std::vector<std::size_t> window_assignments(std::span<const UserComment> comments,
                                            Timestamp tau, const WindowSpec& spec) {
  spec.validate();
  const auto pos = activity_positions(comments, tau, spec.kind);
  std::vector<std::size_t> out(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) out[i] = spec.window_of(pos[i]);
  return out;
}

std::optional<lexicon::UserEmbedding> scope_embedding(std::span<const UserComment> comments,
                                                      const std::string& author,
                                                      const std::string& community,
                                                      const std::string& scope_tag) {
  if (comments.empty()) return std::nullopt;
  std::vector<const lexicon::FeatureVector*> vecs;
  vecs.reserve(comments.size());
  for (const auto& c : comments) vecs.push_back(c.features);
  return lexicon::aggregate_embeddings(std::span<const lexicon::FeatureVector* const>(vecs),
                                       {author, community, scope_tag});
}

std::vector<std::optional<lexicon::UserEmbedding>> window_embeddings(
    std::span<const UserComment> comments, Timestamp tau, const WindowSpec& spec,
    const std::string& author, const std::string& community) {
  const auto pre = pre_scope(comments, tau);
  const auto windows = window_assignments(pre, tau, spec);
  std::vector<std::vector<UserComment>> members(spec.size());
  for (std::size_t i = 0; i < pre.size(); ++i) members[windows[i]].push_back(pre[i]);
  std::vector<std::optional<lexicon::UserEmbedding>> out(spec.size());
  for (std::size_t w = 0; w < spec.size(); ++w) {
    out[w] = scope_embedding(members[w], author, community, spec.tag(w));
  }
  return out;
}

std::optional<lexicon::UserEmbedding> exclusion_embedding(std::span<const UserComment> comments,
                                                          int months, Timestamp tau,
                                                          const std::string& author,
                                                          const std::string& community) {
  if (months <= 0) throw ConfigError("exclusion window must be a positive number of months");
  const Timestamp cut = tau - static_cast<Timestamp>(months) * kSecondsPerMonth;
  auto kept = pre_scope(comments, cut);
  return scope_embedding(kept, author, community, "excl-" + std::to_string(months) + "m");
}

stats::TestResult trend_over_windows(std::span<const double> accuracies) {
  return stats::mann_kendall(accuracies);
}

}  // namespace mindprint::trajectory
