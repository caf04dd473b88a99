// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_LEXICON_HPP_
#define MINDPRINT_LEXICON_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mindprint::lexicon {

// Category dictionary. Entries ending in '*' are prefix entries and match
// every token that starts with the prefix (including the prefix itself).
//
// Matching runs over a byte trie holding both entry kinds: walking a token
// collects prefix categories on the way down and exact categories at the
// final node.
class Lexicon {
 public:
  Lexicon() = default;
  // Throws DataError on an empty list or a duplicate name.
  explicit Lexicon(std::vector<std::string> categories);

  // Adds `pattern` (lowercased) for the given category indices. Repeated
  // patterns accumulate the union of their categories.
  void add_entry(std::string_view pattern, std::span<const std::size_t> categories);

  std::size_t dimension() const { return categories_.size(); }
  const std::vector<std::string>& categories() const { return categories_; }
  std::optional<std::size_t> category_index(std::string_view name) const;

  // word -> sorted category indices
  const std::map<std::string, std::vector<std::size_t>>& exact_entries() const {
    return exact_;
  }
  // prefix (without '*') -> sorted category indices
  const std::map<std::string, std::vector<std::size_t>>& prefix_entries() const {
    return prefix_;
  }

  // Calls fn(category) for every category hit by `token`. A category can be
  // reported more than once when several entries match.
  template <class Fn>
  void for_each_match(std::string_view token, Fn&& fn) const;

  bool operator==(const Lexicon& other) const {
    return categories_ == other.categories_ && exact_ == other.exact_ &&
           prefix_ == other.prefix_;
  }

 private:
  struct Node {
    std::uint32_t edge_begin = 0;
    std::uint32_t edge_count = 0;
    std::uint32_t exact_begin = 0;
    std::uint32_t exact_count = 0;
    std::uint32_t prefix_begin = 0;
    std::uint32_t prefix_count = 0;
  };

  friend Lexicon parse_lexicon(std::istream& in, std::string_view source_name);

  void insert(std::string_view pattern, std::span<const std::size_t> categories);
  void rebuild_trie();
  std::uint32_t child(std::uint32_t node, unsigned char byte) const;

  std::vector<std::string> categories_;
  std::map<std::string, std::vector<std::size_t>> exact_;
  std::map<std::string, std::vector<std::size_t>> prefix_;

  std::vector<Node> nodes_;
  std::vector<unsigned char> edge_label_;
  std::vector<std::uint32_t> edge_target_;
  std::vector<std::uint32_t> node_categories_;
};

inline constexpr std::uint32_t kNoNode = 0xffffffffu;

inline std::uint32_t Lexicon::child(std::uint32_t node, unsigned char byte) const {
  const Node& n = nodes_[node];
  const unsigned char* labels = edge_label_.data() + n.edge_begin;
  std::uint32_t lo = 0, hi = n.edge_count;
  while (lo < hi) {
    const std::uint32_t mid = (lo + hi) / 2;
    if (labels[mid] < byte) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < n.edge_count && labels[lo] == byte) return edge_target_[n.edge_begin + lo];
  return kNoNode;
}

template <class Fn>
void Lexicon::for_each_match(std::string_view token, Fn&& fn) const {
  if (nodes_.empty()) return;
  std::uint32_t node = 0;
  for (std::size_t i = 0;; ++i) {
    const Node& n = nodes_[node];
    for (std::uint32_t k = 0; k < n.prefix_count; ++k) {
      fn(static_cast<std::size_t>(node_categories_[n.prefix_begin + k]));
    }
    if (i == token.size()) {
      for (std::uint32_t k = 0; k < n.exact_count; ++k) {
        fn(static_cast<std::size_t>(node_categories_[n.exact_begin + k]));
      }
      return;
    }
    node = child(node, static_cast<unsigned char>(token[i]));
    if (node == kNoNode) return;
  }
}

// Reads the dictionary format: a header between two lines holding only '%'
// that maps integer ids to names ("3<ws>cogproc"), then body lines
// "word<TAB>id[,id...]" (ids may also be separated by tabs or spaces).
// Blank lines are skipped. Throws DataError with the line number on unknown
// ids and malformed lines.
Lexicon parse_lexicon(std::istream& in, std::string_view source_name = "<stream>");
Lexicon load_lexicon(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

// Splits text into lowercase word tokens. Letters are ASCII letters plus
// Latin-1/Latin Extended, Greek and Cyrillic letters (UTF-8). An apostrophe
// (' or U+2019) between two letters stays inside the token as '. Digits,
// punctuation and any other code point separate tokens. A token that would
// start with "http://", "https://" or "www." is skipped up to the next
// whitespace.
std::vector<std::string> tokenize(std::string_view text);

// Allocation-free form of tokenize(). The view returned by next() stays
// valid until the following call.
class TokenStream {
 public:
  explicit TokenStream(std::string_view text) : text_(text) {}
  // Returns false at end of text.
  bool next(std::string_view& token);

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::string buffer_;
};

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

// values[k] is the percentage of tokens hitting category k.
struct FeatureVector {
  std::vector<double> values;
  std::size_t token_count = 0;

  bool operator==(const FeatureVector&) const = default;
};

// Reusable featurizer. Holds per-call scratch, so use one instance per
// thread; the lexicon itself is shared read-only.
class Featurizer {
 public:
  explicit Featurizer(const Lexicon& lexicon);
  FeatureVector operator()(std::string_view text);

 private:
  const Lexicon* lexicon_;
  std::vector<std::size_t> hits_;
  std::vector<std::size_t> stamp_;
};

FeatureVector featurize_comment(const Lexicon& lexicon, std::string_view text);

struct EmbeddingScope {
  std::string author;
  std::string community;
  std::string scope_tag;
};

struct UserEmbedding {
  std::string author;
  std::string community;
  std::string scope_tag;
  std::vector<double> vector;
  std::size_t n_comments = 0;

  bool operator==(const UserEmbedding&) const = default;
};

// Componentwise mean, summed pairwise so that the result does not depend on
// how a caller chunks the work. Throws DataError("no comments in scope") on
// an empty list.
UserEmbedding aggregate_embeddings(std::span<const FeatureVector> vectors,
                                   EmbeddingScope scope);
UserEmbedding aggregate_embeddings(std::span<const FeatureVector* const> vectors,
                                   EmbeddingScope scope);

// Embedding store: CSV "author,community,scope_tag,n_comments,f_1..f_D" and
// a JSON sidecar {"categories": [...], "dimension": D}.
void write_embeddings(const std::filesystem::path& csv,
                      const std::filesystem::path& sidecar,
                      std::span<const std::string> categories,
                      std::span<const UserEmbedding> rows);

struct EmbeddingStore {
  std::vector<std::string> categories;
  std::vector<UserEmbedding> rows;
};

EmbeddingStore read_embeddings(const std::filesystem::path& csv,
                               const std::filesystem::path& sidecar);

}  // namespace mindprint::lexicon

#endif  // MINDPRINT_LEXICON_HPP_
