// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_CORPUS_HPP_
#define MINDPRINT_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace mindprint::corpus {

using Timestamp = std::int64_t;
using AuthorSet = std::set<std::string>;

// One authored comment, in Pushshift field conventions.
struct Comment {
  std::string id;
  std::string author;
  std::string community;  // "subreddit" in the dump
  Timestamp created_utc = 0;
  std::string body;

  bool operator==(const Comment&) const = default;
};

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

enum class SourceFormat { kNdjson, kNdjsonZstd };

// Sniffs the zstd frame magic; anything else is plain NDJSON.
SourceFormat detect_format(const std::filesystem::path& path);

struct ReadStats {
  std::size_t lines = 0;      // non-blank lines seen
  std::size_t malformed = 0;  // lines skipped as unparseable or invalid

  double malformed_fraction() const {
    return lines == 0 ? 0.0 : static_cast<double>(malformed) / lines;
  }
  // More than 10% of lines were malformed.
  bool high_malformed_rate() const { return malformed_fraction() > 0.10; }
  std::vector<std::string> warnings() const;

  ReadStats& operator+=(const ReadStats& other) {
    lines += other.lines;
    malformed += other.malformed;
    return *this;
  }
};

// Parses one NDJSON line. Returns nullopt for malformed input: invalid JSON,
// a missing or mistyped required field (id, author, subreddit, body,
// created_utc), an empty author, or a non-positive timestamp. created_utc
// may be an integer, a float, or a numeric string, as in historical dumps.
std::optional<Comment> parse_comment_line(std::string_view line);

// Streams comments in file order. Lines are parsed in batches of
// `batch_lines` on up to `workers` threads; batches are delivered to
// `on_batch` sequentially and in order. Throws IoError if the source cannot
// be read or decompressed.
using BatchCallback = std::function<void(std::span<Comment>)>;
ReadStats stream_comments(std::istream& source, SourceFormat format,
                          const BatchCallback& on_batch, std::size_t workers = 1,
                          std::size_t batch_lines = 1 << 14);
ReadStats stream_comments_file(const std::filesystem::path& path,
                               const BatchCallback& on_batch,
                               std::size_t workers = 1,
                               std::size_t batch_lines = 1 << 14);

struct ReadResult {
  std::vector<Comment> comments;
  ReadStats stats;
};

ReadResult read_comments(std::istream& source, SourceFormat format,
                         std::size_t workers = 1);
ReadResult read_comments_file(const std::filesystem::path& path,
                              std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

// 2013-01-01T00:00:00Z and 2023-12-31T23:59:59Z.
inline constexpr Timestamp kDefaultStartUtc = 1356998400;
inline constexpr Timestamp kDefaultEndUtc = 1704067199;

struct FilterSpec {
  std::unordered_set<std::string> bot_list;
  Timestamp start_utc = kDefaultStartUtc;  // inclusive
  Timestamp end_utc = kDefaultEndUtc;      // inclusive
  int min_comments_per_community = 20;
  // Sentinels for deleted content. They are matched against the body and
  // against the author ("[deleted]" is how dumps mark deleted accounts).
  std::set<std::string> drop_markers{"[deleted]", "[removed]"};

  // Throws ConfigError unless start_utc < end_utc and the threshold is >= 1.
  void validate() const;

  bool keeps(const Comment& comment) const;
};

// One author name per line; blank lines and lines starting with '#' are
// ignored, surrounding whitespace is trimmed.
std::unordered_set<std::string> load_bot_list(const std::filesystem::path& path);
std::unordered_set<std::string> parse_bot_list(std::istream& in);

// Drops bot authors, out-of-range timestamps, deleted markers and empty
// bodies. Order is preserved.
std::vector<Comment> filter_corpus(std::span<const Comment> comments,
                                   const FilterSpec& spec);

// ---------------------------------------------------------------------------
// Activity index
// ---------------------------------------------------------------------------

struct ActivityStats {
  std::int64_t count = 0;
  Timestamp first_ts = 0;
  Timestamp last_ts = 0;

  bool operator==(const ActivityStats&) const = default;
};

// Per (author, community) comment counts and timestamp extrema, plus the
// first timestamp of every author in the target community. Partial indices
// built over disjoint chunks merge into exactly the index of the whole.
class ActivityIndex {
 public:
  using Key = std::pair<std::string, std::string>;  // (community, author)

  explicit ActivityIndex(std::string target_community = {});

  const std::string& target_community() const { return target_; }

  void add(std::string_view author, std::string_view community, Timestamp ts);
  void add(const Comment& comment) {
    add(comment.author, comment.community, comment.created_utc);
  }
  void merge(const ActivityIndex& other);

  const ActivityStats* find(std::string_view author,
                            std::string_view community) const;
  std::int64_t count(std::string_view author, std::string_view community) const;
  std::int64_t target_count(std::string_view author) const {
    return count(author, target_);
  }
  std::optional<Timestamp> first_target_ts(std::string_view author) const;

  bool has_community(std::string_view community) const;
  std::vector<std::string> communities() const;
  // Authors with at least one comment in `community`, sorted.
  std::vector<std::string> authors_in(std::string_view community) const;

  const std::map<Key, ActivityStats>& entries() const { return entries_; }
  const std::map<std::string, Timestamp>& first_target() const {
    return first_target_;
  }

  // index.csv: author,community,count,first_ts,last_ts
  // first_target.csv: author,first_target_ts
  void write_csv(const std::filesystem::path& index_csv,
                 const std::filesystem::path& first_target_csv) const;
  static ActivityIndex read_csv(const std::filesystem::path& index_csv,
                                const std::filesystem::path& first_target_csv,
                                std::string target_community);

  bool operator==(const ActivityIndex&) const = default;

 private:
  std::string target_;
  std::map<Key, ActivityStats> entries_;
  std::map<std::string, Timestamp> first_target_;
};

// Builds the index over `comments` split into `workers` contiguous chunks.
// The result does not depend on the worker count.
ActivityIndex build_activity_index(std::span<const Comment> comments,
                                   std::string_view target_community,
                                   std::size_t workers = 1);

// Authors with at least spec.min_comments_per_community comments in
// `community`. An unknown community yields an empty set and, when
// `warnings` is given, a warning naming it.
AuthorSet eligible_users(const ActivityIndex& index, std::string_view community,
                         const FilterSpec& spec,
                         std::vector<std::string>* warnings = nullptr);

}  // namespace mindprint::corpus

#endif  // MINDPRINT_CORPUS_HPP_
