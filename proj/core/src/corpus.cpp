// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include "mindprint/corpus.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <boost/iostreams/filter/zstd.hpp>
#include <boost/iostreams/filtering_stream.hpp>

#include "json.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"
#include "mindprint/parallel.hpp"

namespace mindprint::corpus {
namespace {

using nlohmann::json;

std::optional<Timestamp> timestamp_from(const json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) return std::nullopt;
    return static_cast<Timestamp>(std::floor(d));
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    Timestamp ts = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), ts);
    if (ec == std::errc() && end == s.data() + s.size()) return ts;
    double d = 0;
    auto [dend, dec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (dec == std::errc() && dend == s.data() + s.size() && std::isfinite(d)) {
      return static_cast<Timestamp>(std::floor(d));
    }
  }
  return std::nullopt;
}

const std::string* string_field(const json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end() || !it->is_string()) return nullptr;
  return &it->get_ref<const std::string&>();
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

}  // namespace

std::vector<std::string> ReadStats::warnings() const {
  std::vector<std::string> out;
  if (high_malformed_rate()) {
    std::ostringstream msg;
    msg << malformed << " of " << lines
        << " lines were malformed (more than 10%); check the input format";
    out.push_back(msg.str());
  }
  return out;
}

SourceFormat detect_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<unsigned char, 4> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), magic.size());
  if (in.gcount() == 4 && magic == std::array<unsigned char, 4>{0x28, 0xB5, 0x2F, 0xFD}) {
    return SourceFormat::kNdjsonZstd;
  }
  return SourceFormat::kNdjson;
}

std::optional<Comment> parse_comment_line(std::string_view line) {
  json obj = json::parse(line.begin(), line.end(), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) return std::nullopt;

  const std::string* id = string_field(obj, "id");
  const std::string* author = string_field(obj, "author");
  const std::string* subreddit = string_field(obj, "subreddit");
  const std::string* body = string_field(obj, "body");
  auto ts_it = obj.find("created_utc");
  if (!id || !author || !subreddit || !body || ts_it == obj.end()) {
    return std::nullopt;
  }
  const auto ts = timestamp_from(*ts_it);
  if (!ts || *ts <= 0 || author->empty()) return std::nullopt;

  return Comment{*id, *author, *subreddit, *ts, *body};
}

ReadStats stream_comments(std::istream& source, SourceFormat format,
                          const BatchCallback& on_batch, std::size_t workers,
                          std::size_t batch_lines) {
  namespace io = boost::iostreams;
  io::filtering_istream in;
  if (format == SourceFormat::kNdjsonZstd) in.push(io::zstd_decompressor());
  in.push(source);

  batch_lines = std::max<std::size_t>(batch_lines, 1);
  ReadStats total;
  std::vector<std::string> lines;
  lines.reserve(batch_lines);

  auto flush = [&] {
    if (lines.empty()) return;
    std::vector<std::optional<Comment>> parsed(lines.size());
    // Chunk the batch so each thread parses a contiguous slice.
    const std::size_t chunks = std::min(resolve_workers(workers), lines.size());
    const std::size_t per = (lines.size() + chunks - 1) / chunks;
    parallel_for(chunks, workers, [&](std::size_t c) {
      const std::size_t end = std::min(lines.size(), (c + 1) * per);
      for (std::size_t i = c * per; i < end; ++i) {
        parsed[i] = parse_comment_line(lines[i]);
      }
    });
    std::vector<Comment> batch;
    batch.reserve(parsed.size());
    for (auto& p : parsed) {
      ++total.lines;
      if (p) {
        batch.push_back(std::move(*p));
      } else {
        ++total.malformed;
      }
    }
    lines.clear();
    if (!batch.empty()) on_batch(batch);
  };

  try {
    std::string line;
    while (std::getline(in, line)) {
      if (is_blank(line)) continue;
      lines.push_back(std::move(line));
      line.clear();
      if (lines.size() >= batch_lines) flush();
    }
    if (in.bad()) throw IoError("read error while streaming comments");
  } catch (const io::zstd_error& e) {
    throw IoError(std::string("zstd decompression failed: ") + e.what());
  } catch (const std::ios_base::failure& e) {
    throw IoError(std::string("read error: ") + e.what());
  }
  flush();
  return total;
}

ReadStats stream_comments_file(const std::filesystem::path& path,
                               const BatchCallback& on_batch, std::size_t workers,
                               std::size_t batch_lines) {
  const SourceFormat format = detect_format(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return stream_comments(in, format, on_batch, workers, batch_lines);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

ReadResult read_comments(std::istream& source, SourceFormat format,
                         std::size_t workers) {
  ReadResult result;
  result.stats = stream_comments(
      source, format,
      [&](std::span<Comment> batch) {
        std::move(batch.begin(), batch.end(), std::back_inserter(result.comments));
      },
      workers);
  return result;
}

ReadResult read_comments_file(const std::filesystem::path& path,
                              std::size_t workers) {
  ReadResult result;
  result.stats = stream_comments_file(
      path,
      [&](std::span<Comment> batch) {
        std::move(batch.begin(), batch.end(), std::back_inserter(result.comments));
      },
      workers);
  return result;
}

// ---------------------------------------------------------------------------

void FilterSpec::validate() const {
  if (start_utc >= end_utc) {
    throw ConfigError("time range must satisfy start < end (got " +
                      std::to_string(start_utc) + " .. " +
                      std::to_string(end_utc) + ")");
  }
  if (min_comments_per_community < 1) {
    throw ConfigError("min_comments_per_community must be >= 1");
  }
}

bool FilterSpec::keeps(const Comment& c) const {
  if (c.body.empty()) return false;
  if (c.created_utc < start_utc || c.created_utc > end_utc) return false;
  if (bot_list.contains(c.author)) return false;
  if (drop_markers.contains(c.body) || drop_markers.contains(c.author)) {
    return false;
  }
  return true;
}

std::unordered_set<std::string> parse_bot_list(std::istream& in) {
  std::unordered_set<std::string> bots;
  std::string line;
  while (std::getline(in, line)) {
    auto name = trim(line);
    if (name.empty() || name.front() == '#') continue;
    bots.emplace(name);
  }
  return bots;
}

std::unordered_set<std::string> load_bot_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open bot list " + path.string());
  return parse_bot_list(in);
}

std::vector<Comment> filter_corpus(std::span<const Comment> comments,
                                   const FilterSpec& spec) {
  std::vector<Comment> out;
  out.reserve(comments.size());
  for (const auto& c : comments) {
    if (spec.keeps(c)) out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------

ActivityIndex::ActivityIndex(std::string target_community)
    : target_(std::move(target_community)) {}

void ActivityIndex::add(std::string_view author, std::string_view community,
                        Timestamp ts) {
  auto [it, inserted] = entries_.try_emplace(
      Key{std::string(community), std::string(author)}, ActivityStats{1, ts, ts});
  if (!inserted) {
    auto& s = it->second;
    ++s.count;
    s.first_ts = std::min(s.first_ts, ts);
    s.last_ts = std::max(s.last_ts, ts);
  }
  if (community == target_) {
    auto [ft, fresh] = first_target_.try_emplace(std::string(author), ts);
    if (!fresh) ft->second = std::min(ft->second, ts);
  }
}

void ActivityIndex::merge(const ActivityIndex& other) {
  if (other.target_ != target_) {
    throw DataError("cannot merge activity indices for different targets ('" +
                    target_ + "' vs '" + other.target_ + "')");
  }
  for (const auto& [key, stats] : other.entries_) {
    auto [it, inserted] = entries_.try_emplace(key, stats);
    if (!inserted) {
      auto& s = it->second;
      s.count += stats.count;
      s.first_ts = std::min(s.first_ts, stats.first_ts);
      s.last_ts = std::max(s.last_ts, stats.last_ts);
    }
  }
  for (const auto& [author, ts] : other.first_target_) {
    auto [it, inserted] = first_target_.try_emplace(author, ts);
    if (!inserted) it->second = std::min(it->second, ts);
  }
}

const ActivityStats* ActivityIndex::find(std::string_view author,
                                         std::string_view community) const {
  auto it = entries_.find(Key{std::string(community), std::string(author)});
  return it == entries_.end() ? nullptr : &it->second;
}

std::int64_t ActivityIndex::count(std::string_view author,
                                  std::string_view community) const {
  const auto* s = find(author, community);
  return s ? s->count : 0;
}

std::optional<Timestamp> ActivityIndex::first_target_ts(std::string_view author) const {
  auto it = first_target_.find(std::string(author));
  if (it == first_target_.end()) return std::nullopt;
  return it->second;
}

bool ActivityIndex::has_community(std::string_view community) const {
  auto it = entries_.lower_bound(Key{std::string(community), std::string()});
  return it != entries_.end() && it->first.first == community;
}

std::vector<std::string> ActivityIndex::communities() const {
  std::vector<std::string> out;
  for (const auto& [key, _] : entries_) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  return out;
}

std::vector<std::string> ActivityIndex::authors_in(std::string_view community) const {
  std::vector<std::string> out;
  for (auto it = entries_.lower_bound(Key{std::string(community), std::string()});
       it != entries_.end() && it->first.first == community; ++it) {
    out.push_back(it->first.second);
  }
  return out;
}

void ActivityIndex::write_csv(const std::filesystem::path& index_csv,
                              const std::filesystem::path& first_target_csv) const {
  std::ostringstream idx;
  const std::vector<std::string> header{"author", "community", "count", "first_ts",
                                        "last_ts"};
  write_csv_row(idx, header);
  for (const auto& [key, s] : entries_) {
    const std::vector<std::string> row{key.second, key.first, std::to_string(s.count),
                                       std::to_string(s.first_ts),
                                       std::to_string(s.last_ts)};
    write_csv_row(idx, row);
  }
  write_text_file(index_csv, idx.str());

  std::ostringstream ft;
  const std::vector<std::string> ft_header{"author", "first_target_ts"};
  write_csv_row(ft, ft_header);
  for (const auto& [author, ts] : first_target_) {
    const std::vector<std::string> row{author, std::to_string(ts)};
    write_csv_row(ft, row);
  }
  write_text_file(first_target_csv, ft.str());
}

ActivityIndex ActivityIndex::read_csv(const std::filesystem::path& index_csv,
                                      const std::filesystem::path& first_target_csv,
                                      std::string target_community) {
  ActivityIndex index(std::move(target_community));
  const CsvTable idx = read_csv_file(index_csv);
  const auto a = idx.column("author"), c = idx.column("community"),
             n = idx.column("count"), f = idx.column("first_ts"),
             l = idx.column("last_ts");
  for (const auto& row : idx.rows) {
    ActivityStats s{parse_int(row[n]), parse_int(row[f]), parse_int(row[l])};
    if (s.count < 1 || s.first_ts > s.last_ts) {
      throw DataError(index_csv.string() + ": invalid row for author '" + row[a] + "'");
    }
    index.entries_[Key{row[c], row[a]}] = s;
  }
  const CsvTable ft = read_csv_file(first_target_csv);
  const auto fa = ft.column("author"), fts = ft.column("first_target_ts");
  for (const auto& row : ft.rows) index.first_target_[row[fa]] = parse_int(row[fts]);
  return index;
}

ActivityIndex build_activity_index(std::span<const Comment> comments,
                                   std::string_view target_community,
                                   std::size_t workers) {
  const std::size_t chunks =
      std::max<std::size_t>(1, std::min(resolve_workers(workers), comments.size()));
  std::vector<ActivityIndex> partial(chunks, ActivityIndex(std::string(target_community)));
  const std::size_t per = (comments.size() + chunks - 1) / chunks;
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t end = std::min(comments.size(), (c + 1) * per);
    for (std::size_t i = c * per; i < end; ++i) partial[c].add(comments[i]);
  });
  ActivityIndex index = std::move(partial.front());
  for (std::size_t c = 1; c < chunks; ++c) index.merge(partial[c]);
  return index;
}

AuthorSet eligible_users(const ActivityIndex& index, std::string_view community,
                         const FilterSpec& spec, std::vector<std::string>* warnings) {
  AuthorSet out;
  if (!index.has_community(community)) {
    if (warnings) {
      warnings->push_back("community '" + std::string(community) +
                          "' does not appear in the activity index");
    }
    return out;
  }
  auto it = index.entries().lower_bound(
      ActivityIndex::Key{std::string(community), std::string()});
  for (; it != index.entries().end() && it->first.first == community; ++it) {
    if (it->second.count >= spec.min_comments_per_community) {
      out.insert(it->first.second);
    }
  }
  return out;
}

}  // namespace mindprint::corpus
