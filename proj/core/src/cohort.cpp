// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include "mindprint/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"
#include "mindprint/random.hpp"

namespace mindprint::cohort {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

// ---- ActivityBucket ----

bool ActivityBucket::contains(std::int64_t count) const {
  if (lower_inclusive ? count < lower : count <= lower) return false;
  if (upper && (upper_inclusive ? count > *upper : count >= *upper)) return false;
  return true;
}

std::string ActivityBucket::label() const {
  std::string out = lower_inclusive ? "[" : "(";
  out += std::to_string(lower);
  out += ',';
  if (upper) {
    out += std::to_string(*upper);
    out += upper_inclusive ? "]" : ")";
  } else {
    out += "inf)";
  }
  return out;
}

ActivityBucket ActivityBucket::parse(std::string_view text) {
  const std::string original(text);
  auto bad = [&](const std::string& why) {
    return ConfigError("bucket '" + original + "': " + why);
  };
  text = trim(text);
  if (text.size() < 5) throw bad("expected interval notation like (1,10]");
  ActivityBucket b;
  if (text.front() == '[') {
    b.lower_inclusive = true;
  } else if (text.front() != '(') {
    throw bad("must start with '(' or '['");
  }
  if (text.back() == ']') {
    b.upper_inclusive = true;
  } else if (text.back() != ')') {
    throw bad("must end with ')' or ']'");
  }
  const auto inner = text.substr(1, text.size() - 2);
  const auto comma = inner.find(',');
  if (comma == std::string_view::npos) throw bad("missing ','");
  try {
    b.lower = parse_int(trim(inner.substr(0, comma)));
    const auto hi = trim(inner.substr(comma + 1));
    if (hi == "inf" || hi == "+inf") {
      if (b.upper_inclusive) throw bad("an unbounded end must be open");
    } else {
      b.upper = parse_int(hi);
    }
  } catch (const DataError& e) {
    throw bad(e.what());
  }
  if (b.upper) {
    const std::int64_t lo = b.lower_inclusive ? b.lower : b.lower + 1;
    const std::int64_t up = b.upper_inclusive ? *b.upper : *b.upper - 1;
    if (lo > up) throw bad("interval is empty");
  }
  return b;
}

std::vector<ActivityBucket> ActivityBucket::canonical() {
  return {ActivityBucket{0, false, 1, true}, ActivityBucket{1, false, 10, false},
          ActivityBucket{10, true, 100, false}, ActivityBucket{100, true, std::nullopt, false}};
}

ActivityBucket ActivityBucket::any_activity() {
  return ActivityBucket{0, false, std::nullopt, false};
}

// ---- pools ----

Pools label_pools(const corpus::ActivityIndex& index, std::string_view community,
                  const corpus::AuthorSet& eligible,
                  const std::optional<ActivityBucket>& bucket) {
  const ActivityBucket b = bucket.value_or(ActivityBucket::any_activity());
  Pools pools;
  for (const auto& author : eligible) {
    const auto n = index.target_count(author);
    if (n == 0) {
      pools.negatives.push_back(author);
    } else if (b.contains(n)) {
      pools.positives.push_back(author);
    }
  }
  if (pools.positives.empty()) {
    throw DataError("no cohort members in '" + std::string(community) + "' for bucket " +
                    b.label());
  }
  return pools;
}

// ---- datasets ----

std::size_t LabeledDataset::count(std::uint8_t label) const {
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [&](const LabeledRow& r) { return r.label == label; }));
}

Examples LabeledDataset::examples(Split split) const {
  Examples ex;
  for (const auto& r : rows) {
    if (r.split != split) continue;
    ex.x.append_row(r.features);
    ex.y.push_back(r.label);
  }
  return ex;
}

std::vector<std::string> LabeledDataset::authors(Split split) const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (r.split == split) out.push_back(r.author);
  }
  return out;
}

LabeledDataset build_balanced_dataset(const EmbeddingLookup& positive_embeddings,
                                      const EmbeddingLookup& negative_embeddings,
                                      std::span<const std::string> positives,
                                      std::span<const std::string> negatives,
                                      std::uint64_t seed) {
  LabeledDataset ds;
  ds.resample_seed = seed;

  const std::set<std::string> pos_set(positives.begin(), positives.end());
  for (const auto& a : negatives) {
    if (pos_set.contains(a)) {
      throw DataError("author '" + a + "' is in both the positive and negative pools");
    }
  }

  std::set<std::string> seen;
  for (const auto& a : positives) {
    if (!seen.insert(a).second) continue;
    if (const auto* v = positive_embeddings(a)) {
      ds.rows.push_back(LabeledRow{a, *v, 1, Split::kTrain});
    } else {
      ++ds.drops["positive_without_embedding"];
    }
  }

  std::vector<std::pair<std::string, const std::vector<double>*>> available;
  for (const auto& a : std::set<std::string>(negatives.begin(), negatives.end())) {
    if (const auto* v = negative_embeddings(a)) {
      available.emplace_back(a, v);
    } else {
      ++ds.drops["negative_without_embedding"];
    }
  }

  const std::size_t need = ds.rows.size();
  if (available.size() < need) {
    throw DataError("negative pool too small: " + std::to_string(need) + " positives but " +
                    std::to_string(available.size()) + " negatives (short by " +
                    std::to_string(need - available.size()) + ")");
  }

  Rng rng(seed);
  // Partial Fisher-Yates: the first `need` slots become a uniform sample.
  for (std::size_t i = 0; i < need; ++i) {
    const std::size_t j = i + rng.uniform_index(available.size() - i);
    std::swap(available[i], available[j]);
  }
  for (std::size_t i = 0; i < need; ++i) {
    ds.rows.push_back(LabeledRow{available[i].first, *available[i].second, 0, Split::kTrain});
  }
  return ds;
}

// ---- normalization ----

Normalizer Normalizer::fit(const Matrix& x) {
  if (x.rows() == 0) throw DataError("cannot fit a normalizer on zero rows");
  const std::size_t d = x.cols();
  Normalizer nz;
  nz.mean.assign(d, 0.0);
  nz.stddev.assign(d, 0.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < d; ++k) nz.mean[k] += x(i, k);
  }
  for (auto& m : nz.mean) m /= n;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double dv = x(i, k) - nz.mean[k];
      nz.stddev[k] += dv * dv;
    }
  }
  for (auto& s : nz.stddev) {
    s = std::sqrt(s / n);
    if (s == 0.0) s = 1.0;
  }
  return nz;
}

void Normalizer::apply(Matrix& x) const {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < x.cols(); ++k) x(i, k) = (x(i, k) - mean[k]) / stddev[k];
  }
}

std::vector<double> Normalizer::apply(std::span<const double> row) const {
  std::vector<double> out(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) out[k] = (row[k] - mean[k]) / stddev[k];
  return out;
}

SplitData split_and_normalize(LabeledDataset& dataset, std::uint64_t seed) {
  Rng rng(seed);
  for (std::uint8_t label : {std::uint8_t{1}, std::uint8_t{0}}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
      if (dataset.rows[i].label == label) idx.push_back(i);
    }
    if (idx.size() < kMinRowsPerClass) {
      throw DataError("dataset for '" + dataset.community + "' is too small to split: class " +
                      std::to_string(label) + " has " + std::to_string(idx.size()) + " rows");
    }
    rng.shuffle(std::span<std::size_t>(idx));
    const auto n_train =
        static_cast<std::size_t>(std::llround(kTrainFraction * static_cast<double>(idx.size())));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      dataset.rows[idx[j]].split = j < n_train ? Split::kTrain : Split::kTest;
    }
  }
  SplitData out;
  out.train = dataset.examples(Split::kTrain);
  out.test = dataset.examples(Split::kTest);
  out.normalizer = Normalizer::fit(out.train.x);
  out.normalizer.apply(out.train.x);
  out.normalizer.apply(out.test.x);
  return out;
}

std::pair<LabeledDataset, LabeledDataset> pre_post_datasets(
    const EmbeddingLookup& pre_embeddings, const EmbeddingLookup& post_embeddings,
    const EmbeddingLookup& negative_embeddings, std::span<const std::string> positives,
    std::span<const std::string> negatives, std::uint64_t seed) {
  std::vector<std::string> both;
  std::size_t missing_pre = 0, missing_post = 0;
  for (const auto& a : positives) {
    const bool pre = pre_embeddings(a) != nullptr;
    const bool post = post_embeddings(a) != nullptr;
    missing_pre += !pre;
    missing_post += !post;
    if (pre && post) both.push_back(a);
  }
  if (both.empty()) throw DataError("no positive author has both pre and post activity");

  auto pre = build_balanced_dataset(pre_embeddings, negative_embeddings, both, negatives,
                                    derive_seed(seed, "pre"));
  auto post = build_balanced_dataset(post_embeddings, negative_embeddings, both, negatives,
                                     derive_seed(seed, "post"));
  pre.scope_tag = "pre";
  post.scope_tag = "post";
  for (auto* ds : {&pre, &post}) {
    ds->resample_seed = seed;
    if (missing_pre) ds->drops["positive_without_pre"] = missing_pre;
    if (missing_post) ds->drops["positive_without_post"] = missing_post;
  }
  return {std::move(pre), std::move(post)};
}

// ---- persistence ----

void write_dataset(const std::filesystem::path& csv, const std::filesystem::path& manifest,
                   const LabeledDataset& dataset) {
  std::ostringstream out;
  std::vector<std::string> fields{"author", "label", "split"};
  for (std::size_t k = 0; k < dataset.dimension(); ++k) {
    fields.push_back("f_" + std::to_string(k + 1));
  }
  write_csv_row(out, fields);
  for (const auto& r : dataset.rows) {
    fields = {r.author, std::to_string(r.label), r.split == Split::kTrain ? "train" : "test"};
    for (double v : r.features) fields.push_back(format_double(v));
    write_csv_row(out, fields);
  }
  write_text_file(csv, out.str());

  nlohmann::ordered_json m;
  m["community"] = dataset.community;
  m["bucket"] = dataset.bucket;
  m["scope_tag"] = dataset.scope_tag;
  m["seed"] = dataset.resample_seed;
  m["rows"] = dataset.rows.size();
  m["positives"] = dataset.count(1);
  m["negatives"] = dataset.count(0);
  m["drops"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : dataset.drops) m["drops"][k] = v;
  write_text_file(manifest, m.dump(2) + "\n");
}

LabeledDataset read_dataset(const std::filesystem::path& csv,
                            const std::filesystem::path& manifest) {
  const auto m = nlohmann::json::parse(read_text_file(manifest), nullptr, false);
  if (m.is_discarded()) throw DataError(manifest.string() + ": malformed dataset manifest");
  LabeledDataset ds;
  try {
    ds.community = m.at("community").get<std::string>();
    ds.bucket = m.at("bucket").get<std::string>();
    ds.scope_tag = m.at("scope_tag").get<std::string>();
    ds.resample_seed = m.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : m.at("drops").items()) ds.drops[k] = v.get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest.string() + ": " + e.what());
  }

  const auto table = read_csv_file(csv);
  const std::size_t d = table.header.size() - 3;
  const auto a = table.column("author"), l = table.column("label"), s = table.column("split");
  for (const auto& row : table.rows) {
    LabeledRow r;
    r.author = row[a];
    r.label = static_cast<std::uint8_t>(parse_int(row[l]));
    if (row[s] == "train") {
      r.split = Split::kTrain;
    } else if (row[s] == "test") {
      r.split = Split::kTest;
    } else {
      throw DataError(csv.string() + ": unknown split '" + row[s] + "'");
    }
    r.features.resize(d);
    for (std::size_t k = 0; k < d; ++k) r.features[k] = parse_double(row[3 + k]);
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

}  // namespace mindprint::cohort
