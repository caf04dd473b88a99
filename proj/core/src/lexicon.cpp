// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include "mindprint/lexicon.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"

namespace mindprint::lexicon {
namespace {

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

void merge_sorted(std::vector<std::size_t>& into, std::span<const std::size_t> add) {
  into.insert(into.end(), add.begin(), add.end());
  std::sort(into.begin(), into.end());
  into.erase(std::unique(into.begin(), into.end()), into.end());
}

// ---- UTF-8 helpers for the tokenizer ----

// Decodes one code point at text[pos]; returns its byte length (0 on an
// invalid sequence, in which case the caller treats the byte as a separator).
std::size_t decode_utf8(std::string_view text, std::size_t pos, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  std::size_t len = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return 0;
  }
  if (pos + len > text.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(text[pos + i]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_letter(char32_t cp) {
  if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
  if (cp < 0xC0) return false;
  if (cp <= 0x24F) return cp != 0xD7 && cp != 0xF7;
  if (cp >= 0x386 && cp <= 0x3FF) return cp != 0x387;
  return cp >= 0x400 && cp <= 0x4FF;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0xC0) return cp;
  if (cp <= 0xDE) return cp == 0xD7 ? cp : cp + 0x20;
  if (cp >= 0x100 && cp <= 0x137) return cp | 1u;
  if (cp >= 0x139 && cp <= 0x148) return (cp & 1u) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return cp | 1u;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E) return (cp & 1u) ? cp + 1 : cp;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
         cp == '\v' || cp == 0xA0;
}

bool starts_with_url(std::string_view text, std::size_t pos) {
  auto rest = text.substr(pos);
  auto matches = [&](std::string_view prefix) {
    if (rest.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      char c = rest[i];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      if (c != prefix[i]) return false;
    }
    return true;
  };
  return matches("http://") || matches("https://") || matches("www.");
}

// Sum of rows [begin, end) into acc, pairwise.
template <class Get>
void pairwise_sum(const Get& get, std::size_t begin, std::size_t end,
                  std::vector<double>& acc) {
  const std::size_t n = end - begin;
  if (n <= 8) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      const auto& v = get(i);
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
    }
    return;
  }
  const std::size_t mid = begin + n / 2;
  std::vector<double> right(acc.size());
  pairwise_sum(get, begin, mid, acc);
  pairwise_sum(get, mid, end, right);
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += right[k];
}

template <class Get>
UserEmbedding mean_embedding(const Get& get, std::size_t n, EmbeddingScope scope) {
  if (n == 0) throw DataError("no comments in scope");
  const std::size_t d = get(0).size();
  for (std::size_t i = 1; i < n; ++i) {
    if (get(i).size() != d) throw DataError("feature vectors differ in width");
  }
  std::vector<double> sum(d);
  pairwise_sum(get, 0, n, sum);
  for (double& v : sum) v /= static_cast<double>(n);
  return UserEmbedding{std::move(scope.author), std::move(scope.community),
                       std::move(scope.scope_tag), std::move(sum), n};
}

}  // namespace

// ---------------------------------------------------------------------------

Lexicon::Lexicon(std::vector<std::string> categories)
    : categories_(std::move(categories)) {
  if (categories_.empty()) throw DataError("lexicon needs at least one category");
  std::set<std::string> seen;
  for (const auto& name : categories_) {
    if (!seen.insert(name).second) {
      throw DataError("duplicate category name '" + name + "'");
    }
  }
  rebuild_trie();
}

std::optional<std::size_t> Lexicon::category_index(std::string_view name) const {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i] == name) return i;
  }
  return std::nullopt;
}

void Lexicon::insert(std::string_view pattern, std::span<const std::size_t> cats) {
  for (auto k : cats) {
    if (k >= categories_.size()) {
      throw DataError("category index " + std::to_string(k) + " out of range");
    }
  }
  if (!pattern.empty() && pattern.back() == '*') {
    merge_sorted(prefix_[lowercase_ascii(pattern.substr(0, pattern.size() - 1))], cats);
  } else {
    if (pattern.empty()) throw DataError("empty dictionary entry");
    merge_sorted(exact_[lowercase_ascii(pattern)], cats);
  }
}

void Lexicon::add_entry(std::string_view pattern, std::span<const std::size_t> cats) {
  insert(pattern, cats);
  rebuild_trie();
}

void Lexicon::rebuild_trie() {
  struct Building {
    std::map<unsigned char, std::uint32_t> children;
    const std::vector<std::size_t>* exact = nullptr;
    const std::vector<std::size_t>* prefix = nullptr;
  };
  std::vector<Building> build(1);
  auto walk = [&](const std::string& key) {
    std::uint32_t node = 0;
    for (unsigned char c : key) {
      auto it = build[node].children.find(c);
      if (it == build[node].children.end()) {
        const auto next = static_cast<std::uint32_t>(build.size());
        build[node].children.emplace(c, next);
        build.emplace_back();
        node = next;
      } else {
        node = it->second;
      }
    }
    return node;
  };
  for (const auto& [word, cats] : exact_) build[walk(word)].exact = &cats;
  for (const auto& [prefix, cats] : prefix_) build[walk(prefix)].prefix = &cats;

  nodes_.assign(build.size(), Node{});
  edge_label_.clear();
  edge_target_.clear();
  node_categories_.clear();
  for (std::size_t i = 0; i < build.size(); ++i) {
    Node& n = nodes_[i];
    n.edge_begin = static_cast<std::uint32_t>(edge_label_.size());
    n.edge_count = static_cast<std::uint32_t>(build[i].children.size());
    for (const auto& [label, target] : build[i].children) {
      edge_label_.push_back(label);
      edge_target_.push_back(target);
    }
    n.exact_begin = static_cast<std::uint32_t>(node_categories_.size());
    if (build[i].exact) {
      for (auto k : *build[i].exact) node_categories_.push_back(static_cast<std::uint32_t>(k));
    }
    n.exact_count = static_cast<std::uint32_t>(node_categories_.size()) - n.exact_begin;
    n.prefix_begin = static_cast<std::uint32_t>(node_categories_.size());
    if (build[i].prefix) {
      for (auto k : *build[i].prefix) node_categories_.push_back(static_cast<std::uint32_t>(k));
    }
    n.prefix_count = static_cast<std::uint32_t>(node_categories_.size()) - n.prefix_begin;
  }
}

Lexicon parse_lexicon(std::istream& in, std::string_view source_name) {
  auto fail = [&](std::size_t line_no, const std::string& what) -> DataError {
    return DataError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + what);
  };

  enum class State { kStart, kHeader, kBody } state = State::kStart;
  std::vector<std::string> names;
  std::map<long long, std::size_t> id_to_index;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> entries;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line == "%") {
      if (state == State::kStart) {
        state = State::kHeader;
      } else if (state == State::kHeader) {
        state = State::kBody;
      } else {
        throw fail(line_no, "unexpected '%' after the category header");
      }
      continue;
    }
    if (state == State::kStart) throw fail(line_no, "dictionary must start with a '%' line");

    const auto split = line.find_first_of(" \t");
    const std::string_view head = line.substr(0, split);
    const std::string_view rest =
        split == std::string_view::npos ? std::string_view{} : trim(line.substr(split));

    if (state == State::kHeader) {
      long long id = 0;
      auto [end, ec] = std::from_chars(head.data(), head.data() + head.size(), id);
      if (ec != std::errc() || end != head.data() + head.size()) {
        throw fail(line_no, "category id must be an integer, got '" + std::string(head) + "'");
      }
      const std::string_view name = rest.substr(0, rest.find_first_of(" \t"));
      if (name.empty()) throw fail(line_no, "category " + std::to_string(id) + " has no name");
      if (id_to_index.contains(id)) {
        throw fail(line_no, "duplicate category id " + std::to_string(id));
      }
      if (std::find(names.begin(), names.end(), name) != names.end()) {
        throw fail(line_no, "duplicate category name '" + std::string(name) + "'");
      }
      id_to_index.emplace(id, names.size());
      names.emplace_back(name);
      continue;
    }

    // Body line.
    std::vector<std::size_t> cats;
    std::size_t pos = 0;
    while (pos < rest.size()) {
      const auto b = rest.find_first_not_of(", \t", pos);
      if (b == std::string_view::npos) break;
      const auto e = std::min(rest.find_first_of(", \t", b), rest.size());
      const std::string_view tok = rest.substr(b, e - b);
      long long id = 0;
      auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
      if (ec != std::errc() || end != tok.data() + tok.size()) {
        throw fail(line_no, "invalid category id '" + std::string(tok) + "'");
      }
      auto it = id_to_index.find(id);
      if (it == id_to_index.end()) {
        throw fail(line_no, "unknown category id " + std::to_string(id) + " for '" +
                                std::string(head) + "'");
      }
      cats.push_back(it->second);
      pos = e;
    }
    if (cats.empty()) throw fail(line_no, "entry '" + std::string(head) + "' has no categories");
    if (head == "*") throw fail(line_no, "bare '*' is not a valid entry");
    entries.emplace_back(std::string(head), std::move(cats));
  }
  if (state != State::kBody) {
    throw DataError(std::string(source_name) + ": missing closing '%' of the category header");
  }

  Lexicon lex(std::move(names));
  for (const auto& [pattern, cats] : entries) lex.insert(pattern, cats);
  lex.rebuild_trie();
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dictionary " + path.string());
  return parse_lexicon(in, path.string());
}

// ---------------------------------------------------------------------------

bool TokenStream::next(std::string_view& token) {
  buffer_.clear();
  while (pos_ < text_.size()) {
    char32_t cp = 0;
    const auto b0 = static_cast<unsigned char>(text_[pos_]);
    std::size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else {
      len = decode_utf8(text_, pos_, cp);
      if (len == 0) {
        len = 1;
        cp = 0xFFFD;
      }
    }

    if (is_letter(cp)) {
      if (buffer_.empty() && (cp == 'h' || cp == 'H' || cp == 'w' || cp == 'W') &&
          starts_with_url(text_, pos_)) {
        while (pos_ < text_.size()) {
          char32_t c2 = 0;
          std::size_t l2 = decode_utf8(text_, pos_, c2);
          if (l2 == 0) l2 = 1;
          if (is_space(c2)) break;
          pos_ += l2;
        }
        continue;
      }
      if (cp < 0x80) {
        buffer_ += static_cast<char>(cp >= 'A' && cp <= 'Z' ? cp + 32 : cp);
      } else {
        append_utf8(buffer_, to_lower(cp));
      }
      pos_ += len;
      continue;
    }

    if (is_apostrophe(cp) && !buffer_.empty() && pos_ + len < text_.size()) {
      char32_t after = 0;
      const std::size_t alen = decode_utf8(text_, pos_ + len, after);
      if (alen > 0 && is_letter(after)) {
        buffer_ += '\'';
        pos_ += len;
        continue;
      }
    }

    pos_ += len;
    if (!buffer_.empty()) {
      token = buffer_;
      return true;
    }
  }
  if (!buffer_.empty()) {
    token = buffer_;
    return true;
  }
  return false;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  TokenStream stream(text);
  std::string_view tok;
  while (stream.next(tok)) out.emplace_back(tok);
  return out;
}

// ---------------------------------------------------------------------------

Featurizer::Featurizer(const Lexicon& lexicon)
    : lexicon_(&lexicon),
      hits_(lexicon.dimension()),
      stamp_(lexicon.dimension()) {}

FeatureVector Featurizer::operator()(std::string_view text) {
  std::fill(hits_.begin(), hits_.end(), 0);
  std::fill(stamp_.begin(), stamp_.end(), 0);
  TokenStream stream(text);
  std::string_view tok;
  std::size_t tokens = 0;
  while (stream.next(tok)) {
    ++tokens;
    lexicon_->for_each_match(tok, [&](std::size_t k) {
      if (stamp_[k] != tokens) {
        stamp_[k] = tokens;
        ++hits_[k];
      }
    });
  }
  FeatureVector fv{std::vector<double>(hits_.size(), 0.0), tokens};
  if (tokens > 0) {
    for (std::size_t k = 0; k < hits_.size(); ++k) {
      fv.values[k] = 100.0 * static_cast<double>(hits_[k]) / static_cast<double>(tokens);
    }
  }
  return fv;
}

FeatureVector featurize_comment(const Lexicon& lexicon, std::string_view text) {
  Featurizer f(lexicon);
  return f(text);
}

UserEmbedding aggregate_embeddings(std::span<const FeatureVector> vectors,
                                   EmbeddingScope scope) {
  return mean_embedding(
      [&](std::size_t i) -> const std::vector<double>& { return vectors[i].values; },
      vectors.size(), std::move(scope));
}

UserEmbedding aggregate_embeddings(std::span<const FeatureVector* const> vectors,
                                   EmbeddingScope scope) {
  return mean_embedding(
      [&](std::size_t i) -> const std::vector<double>& { return vectors[i]->values; },
      vectors.size(), std::move(scope));
}

// ---------------------------------------------------------------------------

void write_embeddings(const std::filesystem::path& csv,
                      const std::filesystem::path& sidecar,
                      std::span<const std::string> categories,
                      std::span<const UserEmbedding> rows) {
  std::ostringstream out;
  std::vector<std::string> fields{"author", "community", "scope_tag", "n_comments"};
  for (std::size_t k = 0; k < categories.size(); ++k) {
    fields.push_back("f_" + std::to_string(k + 1));
  }
  write_csv_row(out, fields);
  for (const auto& r : rows) {
    if (r.vector.size() != categories.size()) {
      throw DataError("embedding width " + std::to_string(r.vector.size()) +
                      " does not match " + std::to_string(categories.size()) +
                      " categories");
    }
    fields = {r.author, r.community, r.scope_tag, std::to_string(r.n_comments)};
    for (double v : r.vector) fields.push_back(format_double(v));
    write_csv_row(out, fields);
  }
  write_text_file(csv, out.str());

  nlohmann::ordered_json side;
  side["categories"] = std::vector<std::string>(categories.begin(), categories.end());
  side["dimension"] = categories.size();
  write_text_file(sidecar, side.dump(2) + "\n");
}

EmbeddingStore read_embeddings(const std::filesystem::path& csv,
                               const std::filesystem::path& sidecar) {
  EmbeddingStore store;
  const auto side = nlohmann::json::parse(read_text_file(sidecar), nullptr, false);
  if (side.is_discarded() || !side.contains("categories")) {
    throw DataError(sidecar.string() + ": malformed embedding sidecar");
  }
  store.categories = side["categories"].get<std::vector<std::string>>();
  const std::size_t d = store.categories.size();

  const CsvTable table = read_csv_file(csv);
  if (table.header.size() != 4 + d) {
    throw DataError(csv.string() + ": expected " + std::to_string(d) +
                    " feature columns per the sidecar");
  }
  const auto a = table.column("author"), c = table.column("community"),
             s = table.column("scope_tag"), n = table.column("n_comments");
  store.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    UserEmbedding e{row[a], row[c], row[s], std::vector<double>(d),
                    static_cast<std::size_t>(parse_int(row[n]))};
    for (std::size_t k = 0; k < d; ++k) e.vector[k] = parse_double(row[4 + k]);
    store.rows.push_back(std::move(e));
  }
  return store;
}

}  // namespace mindprint::lexicon
