// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

// Ingest, featurize and dataset stages plus helpers shared by all stages.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "mindprint/corpus.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"
#include "mindprint/parallel.hpp"
#include "mindprint/random.hpp"
#include "mindprint/siamese.hpp"
#include "mindprint/trajectory.hpp"
#include "pipeline_internal.hpp"

namespace mindprint::pipeline {

using json = nlohmann::ordered_json;

std::uint64_t task_seed(std::uint64_t master, std::string_view stage, std::string_view community,
                        std::string_view key, std::uint64_t replica) {
  return derive_seed(derive_seed(derive_seed(derive_seed(master, stage), community), key),
                     replica);
}

namespace detail {

void require(const PipelineConfig& config, const fs::path& relative, const char* stage) {
  if (!fs::exists(config.out_dir / relative)) {
    throw DataError("missing " + relative.string() + " under " + config.out_dir.string() +
                    "; run `mindprint " + stage + "` first");
  }
}

void emit(const Log& log, const std::string& line) {
  if (log) log(line);
}

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& ch : out) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '_' || ch == '-';
    if (!ok) ch = '_';
  }
  return out.empty() ? "_" : out;
}

std::vector<BucketRef> bucket_refs(const PipelineConfig& config) {
  std::vector<BucketRef> out;
  const auto any = cohort::ActivityBucket::any_activity();
  out.push_back({kAnyBucket, any.label(), any});
  for (std::size_t i = 0; i < config.buckets.size(); ++i) {
    out.push_back({"b" + std::to_string(i + 1), config.buckets[i].label(), config.buckets[i]});
  }
  return out;
}

std::vector<std::string> window_scopes(const PipelineConfig& config) {
  std::vector<std::string> out;
  for (auto kind : {trajectory::WindowKind::kTemporal, trajectory::WindowKind::kCumulative}) {
    const bool on = kind == trajectory::WindowKind::kTemporal ? config.windows.temporal
                                                              : config.windows.cumulative;
    if (!on) continue;
    const auto spec = trajectory::WindowSpec::even(kind, config.windows.count);
    for (std::size_t w = 0; w < spec.size(); ++w) out.push_back(spec.tag(w));
  }
  return out;
}

std::vector<std::string> exclusion_scopes(const PipelineConfig& config) {
  std::vector<std::string> out;
  for (int m : config.windows.exclusion_months) out.push_back("excl-" + std::to_string(m) + "m");
  return out;
}

std::vector<DatasetEntry> read_dataset_index(const PipelineConfig& config) {
  require(config, kDatasetIndex, "dataset");
  const auto table = read_csv_file(config.out_dir / kDatasetIndex);
  const auto c = table.column("community"), b = table.column("bucket"),
             bl = table.column("bucket_label"), s = table.column("scope"),
             r = table.column("resample"), sd = table.column("seed"), n = table.column("rows"),
             p = table.column("path");
  std::vector<DatasetEntry> out;
  for (const auto& row : table.rows) {
    DatasetEntry e;
    e.community = row[c];
    e.bucket = row[b];
    e.bucket_label = row[bl];
    e.scope = row[s];
    e.resample = static_cast<std::size_t>(parse_int(row[r]));
    e.seed = std::stoull(row[sd]);
    e.rows = static_cast<std::size_t>(parse_int(row[n]));
    e.csv = row[p];
    e.manifest = fs::path(row[p]).replace_extension(".json");
    out.push_back(std::move(e));
  }
  return out;
}

cohort::LabeledDataset load_dataset(const PipelineConfig& config, const DatasetEntry& entry) {
  return cohort::read_dataset(config.out_dir / entry.csv, config.out_dir / entry.manifest);
}

PreparedData prepare(const cohort::LabeledDataset& dataset) {
  PreparedData d;
  d.train = dataset.examples(cohort::Split::kTrain);
  d.test = dataset.examples(cohort::Split::kTest);
  d.normalizer = cohort::Normalizer::fit(d.train.x);
  d.normalizer.apply(d.train.x);
  d.normalizer.apply(d.test.x);
  return d;
}

FitResult fit_and_score(const PreparedData& data, const PipelineConfig& config,
                        std::uint64_t seed, const std::vector<std::string>& names) {
  FitResult res;
  if (config.grid.size() == 1) {
    res.grid.best = config.grid[0];
    res.grid.best_index = 0;
    res.grid.mean_accuracy = {std::nan("")};
  } else {
    res.grid = forest::grid_search(data.train, config.grid, config.cv_folds,
                                   derive_seed(seed, "grid"), 1);
  }
  res.cv_accuracy = res.grid.mean_accuracy[res.grid.best_index];
  res.model = forest::train_forest(data.train, res.grid.best, derive_seed(seed, "model"), 1);
  res.model.feature_names = names;
  res.accuracy = forest::evaluate(res.model, data.test);
  return res;
}

std::vector<std::string> feature_names(const PipelineConfig& config) {
  require(config, kEmbeddingsJson, "featurize");
  const auto j = nlohmann::json::parse(read_text_file(config.out_dir / kEmbeddingsJson));
  return j.at("categories").get<std::vector<std::string>>();
}

fs::path model_path(const DatasetEntry& entry) {
  return fs::path("models") / sanitize(entry.community) / entry.bucket / entry.scope /
         ("r" + std::to_string(entry.resample) + ".json");
}

void write_table(const fs::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  write_csv_row(out, header);
  for (const auto& r : rows) write_csv_row(out, r);
  write_text_file(path, out.str());
}

}  // namespace detail

using namespace detail;

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

void run_ingest(const PipelineConfig& config, const Log& log) {
  config.filters.validate();
  if (config.target.empty()) throw ConfigError("target community is not set");
  if (config.inputs.empty()) throw ConfigError("no input files given");
  if (config.out_dir.empty()) throw ConfigError("output directory is not set");
  for (const auto& p : config.inputs) {
    if (!fs::exists(p)) throw ConfigError("input " + p.string() + " does not exist");
  }
  corpus::FilterSpec spec = config.filters;
  if (config.bots) {
    if (!fs::exists(*config.bots)) throw ConfigError("bot list " + config.bots->string() + " does not exist");
    spec.bot_list = corpus::load_bot_list(*config.bots);
  }

  const std::size_t workers = resolve_workers(config.workers);
  corpus::ActivityIndex index(config.target);
  corpus::ReadStats stats;
  std::size_t kept = 0, dropped = 0;
  for (const auto& path : config.inputs) {
    emit(log, "ingest: reading " + path.string());
    stats += corpus::stream_comments_file(
        path,
        [&](std::span<corpus::Comment> batch) {
          std::vector<corpus::Comment> survivors = corpus::filter_corpus(batch, spec);
          kept += survivors.size();
          dropped += batch.size() - survivors.size();
          index.merge(corpus::build_activity_index(survivors, config.target, workers));
        },
        workers);
  }
  index.write_csv(config.out_dir / kIndexCsv, config.out_dir / kFirstTargetCsv);

  std::vector<std::string> warnings = stats.warnings();
  for (const auto& c : config.communities) {
    if (!index.has_community(c)) warnings.push_back("community '" + c + "' has no comments");
  }
  if (index.first_target().empty()) {
    warnings.push_back("no comments in target community '" + config.target + "'");
  }
  json s;
  s["inputs"] = config.input_labels;
  s["lines"] = stats.lines;
  s["malformed"] = stats.malformed;
  s["malformed_fraction"] = stats.malformed_fraction();
  s["kept"] = kept;
  s["dropped"] = dropped;
  s["index_entries"] = index.entries().size();
  s["target_authors"] = index.first_target().size();
  s["warnings"] = warnings;
  write_text_file(config.out_dir / kIngestSummary, s.dump(2) + "\n");
  for (const auto& w : warnings) emit(log, "warning: " + w);
  emit(log, "ingest: kept " + std::to_string(kept) + " of " + std::to_string(kept + dropped) +
                " comments");
}

// ---------------------------------------------------------------------------
// featurize
// ---------------------------------------------------------------------------

namespace {

struct StoredComment {
  corpus::Timestamp ts = 0;
  std::string id;
  lexicon::FeatureVector features;
};

struct NegativeSum {
  std::vector<long double> sum;
  std::size_t n = 0;
};

corpus::ActivityIndex load_index(const PipelineConfig& config) {
  require(config, kIndexCsv, "ingest");
  require(config, kFirstTargetCsv, "ingest");
  return corpus::ActivityIndex::read_csv(config.out_dir / kIndexCsv,
                                         config.out_dir / kFirstTargetCsv, config.target);
}

corpus::FilterSpec filter_spec(const PipelineConfig& config) {
  corpus::FilterSpec spec = config.filters;
  if (config.bots) spec.bot_list = corpus::load_bot_list(*config.bots);
  return spec;
}

}  // namespace

void run_featurize(const PipelineConfig& config, const Log& log) {
  config.validate(true);
  const auto lex = lexicon::load_lexicon(config.dictionary);
  const auto index = load_index(config);
  const auto spec = filter_spec(config);
  const std::size_t workers = resolve_workers(config.workers);
  std::vector<std::string> warnings;

  // community -> author -> positive?
  std::unordered_map<std::string, std::unordered_map<std::string, bool>> roles;
  std::map<std::string, std::pair<std::size_t, std::size_t>> pool_sizes;
  for (const auto& c : config.communities) {
    auto& r = roles[c];
    for (const auto& a : corpus::eligible_users(index, c, config.filters, &warnings)) {
      const bool pos = index.target_count(a) > 0;
      r.emplace(a, pos);
      (pos ? pool_sizes[c].first : pool_sizes[c].second)++;
    }
  }

  std::map<std::pair<std::string, std::string>, std::vector<StoredComment>> positives;
  std::map<std::pair<std::string, std::string>, NegativeSum> negatives;
  std::size_t featurized = 0, empty_comments = 0;
  const std::size_t d = lex.dimension();

  for (const auto& path : config.inputs) {
    emit(log, "featurize: reading " + path.string());
    corpus::stream_comments_file(
        path,
        [&](std::span<corpus::Comment> batch) {
          std::vector<std::size_t> keep;
          std::vector<char> is_pos;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& cm = batch[i];
            const auto c = roles.find(cm.community);
            if (c == roles.end()) continue;
            const auto a = c->second.find(cm.author);
            if (a == c->second.end() || !spec.keeps(cm)) continue;
            keep.push_back(i);
            is_pos.push_back(a->second);
          }
          std::vector<lexicon::FeatureVector> vecs(keep.size());
          const std::size_t chunks = std::min<std::size_t>(workers, std::max<std::size_t>(1, keep.size()));
          parallel_for(chunks, workers, [&](std::size_t ch) {
            lexicon::Featurizer f(lex);
            for (std::size_t i = ch; i < keep.size(); i += chunks) vecs[i] = f(batch[keep[i]].body);
          });
          for (std::size_t i = 0; i < keep.size(); ++i) {
            auto& cm = batch[keep[i]];
            if (vecs[i].token_count == 0) {
              ++empty_comments;
              continue;
            }
            ++featurized;
            auto key = std::make_pair(cm.community, cm.author);
            if (is_pos[i]) {
              positives[key].push_back({cm.created_utc, cm.id, std::move(vecs[i])});
            } else {
              auto& ns = negatives[key];
              if (ns.sum.empty()) ns.sum.assign(d, 0.0L);
              for (std::size_t k = 0; k < d; ++k) ns.sum[k] += vecs[i].values[k];
              ++ns.n;
            }
          }
        },
        workers);
  }

  // Positive scopes, computed per author in parallel.
  std::vector<const std::pair<const std::pair<std::string, std::string>,
                              std::vector<StoredComment>>*>
      pos_items;
  for (const auto& item : positives) pos_items.push_back(&item);
  std::vector<std::vector<lexicon::UserEmbedding>> pos_rows(pos_items.size());
  const auto scopes_w = window_scopes(config);
  std::size_t missing_tau = 0;

  parallel_for(pos_items.size(), workers, [&](std::size_t i) {
    const auto& [key, stored] = *pos_items[i];
    const auto& [community, author] = key;
    const auto tau = index.first_target_ts(author);
    if (!tau) return;
    std::vector<trajectory::UserComment> comments;
    comments.reserve(stored.size());
    for (const auto& s : stored) comments.push_back({s.ts, s.id, &s.features});
    auto& out = pos_rows[i];
    auto add = [&](std::optional<lexicon::UserEmbedding> e) {
      if (e) out.push_back(std::move(*e));
    };
    add(trajectory::scope_embedding(comments, author, community, "all"));
    const auto pre = trajectory::pre_scope(comments, *tau);
    const auto post = trajectory::post_scope(comments, *tau);
    add(trajectory::scope_embedding(pre, author, community, "pre"));
    add(trajectory::scope_embedding(post, author, community, "post"));
    for (auto kind : {trajectory::WindowKind::kTemporal, trajectory::WindowKind::kCumulative}) {
      const bool on = kind == trajectory::WindowKind::kTemporal ? config.windows.temporal
                                                                : config.windows.cumulative;
      if (!on || pre.empty()) continue;
      for (auto& e : trajectory::window_embeddings(
               pre, *tau, trajectory::WindowSpec::even(kind, config.windows.count), author,
               community)) {
        add(std::move(e));
      }
    }
    for (int m : config.windows.exclusion_months) {
      add(trajectory::exclusion_embedding(pre, m, *tau, author, community));
    }
    if (config.siamese.enabled && pre.size() >= 2 && post.size() >= 2) {
      const std::span<const trajectory::UserComment> p(pre), a(post);
      const std::size_t hp = (pre.size() + 1) / 2, ha = (post.size() + 1) / 2;
      add(trajectory::scope_embedding(p.first(hp), author, community, "B1"));
      add(trajectory::scope_embedding(p.subspan(hp), author, community, "B2"));
      add(trajectory::scope_embedding(a.first(ha), author, community, "A1"));
      add(trajectory::scope_embedding(a.subspan(ha), author, community, "A2"));
    }
  });
  for (std::size_t i = 0; i < pos_items.size(); ++i) missing_tau += pos_rows[i].empty();

  std::vector<lexicon::UserEmbedding> rows;
  auto pos_it = pos_rows.begin();
  // Merge positive and negative rows in (community, author) order.
  auto neg_it = negatives.begin();
  std::size_t pi = 0;
  while (pi < pos_items.size() || neg_it != negatives.end()) {
    const bool take_pos =
        neg_it == negatives.end() || (pi < pos_items.size() && pos_items[pi]->first < neg_it->first);
    if (take_pos) {
      for (auto& e : *pos_it) rows.push_back(std::move(e));
      ++pos_it;
      ++pi;
    } else {
      const auto& [key, ns] = *neg_it;
      std::vector<double> mean(d);
      for (std::size_t k = 0; k < d; ++k) {
        mean[k] = static_cast<double>(ns.sum[k] / static_cast<long double>(ns.n));
      }
      rows.push_back({key.second, key.first, "all", std::move(mean), ns.n});
      ++neg_it;
    }
  }

  lexicon::write_embeddings(config.out_dir / kEmbeddingsCsv, config.out_dir / kEmbeddingsJson,
                            lex.categories(), rows);
  json s;
  s["dimension"] = d;
  s["comments_featurized"] = featurized;
  s["comments_without_tokens"] = empty_comments;
  s["embeddings"] = rows.size();
  s["communities"] = json::object();
  for (const auto& c : config.communities) {
    s["communities"][c] = {{"eligible_positive", pool_sizes[c].first},
                           {"eligible_negative", pool_sizes[c].second}};
  }
  s["warnings"] = warnings;
  write_text_file(config.out_dir / "embeddings/summary.json", s.dump(2) + "\n");
  for (const auto& w : warnings) emit(log, "warning: " + w);
  emit(log, "featurize: " + std::to_string(featurized) + " comments, " +
                std::to_string(rows.size()) + " embeddings");
}

// ---------------------------------------------------------------------------
// dataset
// ---------------------------------------------------------------------------

namespace {

using ScopeKey = std::tuple<std::string, std::string, std::string>;  // community, scope, author

struct DatasetTask {
  std::string community;
  BucketRef bucket;
  std::string kind;  // "all", "prepost", or a window/exclusion scope
  std::size_t resample = 0;
  std::uint64_t seed = 0;
};

struct TaskOutcome {
  std::vector<cohort::LabeledDataset> datasets;
  std::string skipped;
};

}  // namespace

void run_dataset(const PipelineConfig& config, const Log& log) {
  config.validate(false);
  require(config, kEmbeddingsCsv, "featurize");
  const auto store = lexicon::read_embeddings(config.out_dir / kEmbeddingsCsv,
                                              config.out_dir / kEmbeddingsJson);
  const auto index = load_index(config);
  std::map<ScopeKey, const std::vector<double>*> lookup;
  for (const auto& e : store.rows) lookup[{e.community, e.scope_tag, e.author}] = &e.vector;

  auto lookup_for = [&](const std::string& community, const std::string& scope) {
    return cohort::EmbeddingLookup([&, community, scope](const std::string& a) {
      const auto it = lookup.find({community, scope, a});
      return it == lookup.end() ? nullptr : it->second;
    });
  };

  const auto buckets = bucket_refs(config);
  std::vector<std::string> study_two;
  study_two.push_back("prepost");
  for (const auto& s : window_scopes(config)) study_two.push_back(s);
  for (const auto& s : exclusion_scopes(config)) study_two.push_back(s);

  std::vector<DatasetTask> tasks;
  for (const auto& c : config.communities) {
    for (const auto& b : buckets) {
      for (std::size_t r = 0; r < config.n_resamples; ++r) {
        tasks.push_back({c, b, "all", r, task_seed(config.seed, "dataset", c, b.slug + "/all", r)});
      }
    }
    for (const auto& kind : study_two) {
      for (std::size_t r = 0; r < config.n_resamples; ++r) {
        tasks.push_back(
            {c, buckets[0], kind, r, task_seed(config.seed, "dataset", c, "any/" + kind, r)});
      }
    }
  }

  std::map<std::string, corpus::AuthorSet> eligible;
  for (const auto& c : config.communities) {
    eligible[c] = corpus::eligible_users(index, c, config.filters);
  }

  std::vector<TaskOutcome> outcomes(tasks.size());
  parallel_for(tasks.size(), resolve_workers(config.workers), [&](std::size_t i) {
    const auto& t = tasks[i];
    auto& out = outcomes[i];
    try {
      const auto pools = cohort::label_pools(index, t.community, eligible[t.community], t.bucket.bucket);
      const auto neg = lookup_for(t.community, "all");
      if (t.kind == "prepost") {
        auto [pre, post] = cohort::pre_post_datasets(lookup_for(t.community, "pre"),
                                                     lookup_for(t.community, "post"), neg,
                                                     pools.positives, pools.negatives, t.seed);
        out.datasets.push_back(std::move(pre));
        out.datasets.push_back(std::move(post));
      } else {
        auto ds = cohort::build_balanced_dataset(lookup_for(t.community, t.kind), neg,
                                                 pools.positives, pools.negatives, t.seed);
        ds.scope_tag = t.kind;
        out.datasets.push_back(std::move(ds));
      }
      for (auto& ds : out.datasets) {
        ds.community = t.community;
        ds.bucket = t.bucket.label;
        cohort::split_and_normalize(ds, derive_seed(t.seed, "split:" + ds.scope_tag));
      }
    } catch (const DataError& e) {
      out.datasets.clear();
      out.skipped = e.what();
    }
  });

  std::vector<std::vector<std::string>> index_rows, skipped_rows;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    if (!outcomes[i].skipped.empty()) {
      skipped_rows.push_back({t.community, t.bucket.slug, t.kind, std::to_string(t.resample),
                              outcomes[i].skipped});
      continue;
    }
    for (const auto& ds : outcomes[i].datasets) {
      const fs::path rel = fs::path("datasets") / sanitize(t.community) / t.bucket.slug /
                           ds.scope_tag / ("r" + std::to_string(t.resample) + ".csv");
      cohort::write_dataset(config.out_dir / rel,
                            config.out_dir / fs::path(rel).replace_extension(".json"), ds);
      index_rows.push_back({t.community, t.bucket.slug, t.bucket.label, ds.scope_tag,
                            std::to_string(t.resample), std::to_string(t.seed),
                            std::to_string(ds.rows.size()), rel.generic_string()});
    }
  }
  write_table(config.out_dir / kDatasetIndex,
              {"community", "bucket", "bucket_label", "scope", "resample", "seed", "rows", "path"},
              index_rows);
  write_table(config.out_dir / kDatasetSkipped,
              {"community", "bucket", "scope", "resample", "reason"}, skipped_rows);
  for (const auto& r : skipped_rows) {
    emit(log, "warning: skipped dataset " + r[0] + "/" + r[1] + "/" + r[2] + "/r" + r[3] + ": " +
                  r[4]);
  }
  emit(log, "dataset: wrote " + std::to_string(index_rows.size()) + " datasets");
}

}  // namespace mindprint::pipeline
