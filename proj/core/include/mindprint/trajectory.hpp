// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_TRAJECTORY_HPP_
#define MINDPRINT_TRAJECTORY_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mindprint/corpus.hpp"
#include "mindprint/lexicon.hpp"
#include "mindprint/stats.hpp"

namespace mindprint::trajectory {

using corpus::Timestamp;

// Mean Gregorian month, 30.44 days.
inline constexpr Timestamp kSecondsPerMonth = 2630016;

// T = (t - first) / (tau - first). Throws DataError when tau <= first
// (degenerate user) or t lies outside [first, tau].
double temporal_position(Timestamp t, Timestamp user_first_ts, Timestamp tau);

// N = ordinal_before / total. Throws DataError when total = 0 or
// ordinal_before >= total.
double cumulative_position(std::size_t ordinal_before, std::size_t total);

enum class WindowKind { kTemporal, kCumulative };

// Windows [edge_i, edge_{i+1}), the last one closed at its upper edge.
struct WindowSpec {
  WindowKind kind = WindowKind::kTemporal;
  std::vector<double> edges{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

  static WindowSpec even(WindowKind kind, std::size_t count);
  // Throws ConfigError unless edges rise strictly from 0 to 1.
  void validate() const;
  std::size_t size() const { return edges.size() - 1; }
  // Index of the window holding `position`; positions outside [0,1] throw.
  std::size_t window_of(double position) const;
  // "T-w3" / "N-w3" for window index 2.
  std::string tag(std::size_t window) const;
};

// One comment of a user in one community.
struct UserComment {
  Timestamp ts = 0;
  std::string id;
  const lexicon::FeatureVector* features = nullptr;
};

// Comments with ts < tau, sorted by (ts, id).
std::vector<UserComment> pre_scope(std::span<const UserComment> comments, Timestamp tau);
// Comments with ts >= tau, sorted by (ts, id).
std::vector<UserComment> post_scope(std::span<const UserComment> comments, Timestamp tau);

// Activity positions of the pre-engagement comments, in (ts, id) order.
// Temporal positions use the first pre comment as the minimum; cumulative
// ones use the strictly-before ordinal over the pre comments. Returns an
// empty vector when there are no pre comments.
std::vector<double> activity_positions(std::span<const UserComment> comments, Timestamp tau,
                                       WindowKind kind);

// Window index of every pre-engagement comment (same order as
// activity_positions).
std::vector<std::size_t> window_assignments(std::span<const UserComment> comments,
                                            Timestamp tau, const WindowSpec& spec);

// Per window, the mean feature vector of the pre-engagement comments inside
// it, or nullopt when the window is empty.
std::vector<std::optional<lexicon::UserEmbedding>> window_embeddings(
    std::span<const UserComment> comments, Timestamp tau, const WindowSpec& spec,
    const std::string& author, const std::string& community);

// Mean over comments with ts < tau - months * kSecondsPerMonth, tagged
// "excl-<months>m"; nullopt when none survive.
std::optional<lexicon::UserEmbedding> exclusion_embedding(std::span<const UserComment> comments,
                                                          int months, Timestamp tau,
                                                          const std::string& author,
                                                          const std::string& community);

// Mean over a scope, or nullopt for an empty scope.
std::optional<lexicon::UserEmbedding> scope_embedding(std::span<const UserComment> comments,
                                                      const std::string& author,
                                                      const std::string& community,
                                                      const std::string& scope_tag);

// Mann-Kendall trend over window-ordered accuracies.
stats::TestResult trend_over_windows(std::span<const double> accuracies);

}  // namespace mindprint::trajectory

#endif  // MINDPRINT_TRAJECTORY_HPP_
