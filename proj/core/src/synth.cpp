// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include "mindprint/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"
#include "mindprint/parallel.hpp"
#include "mindprint/random.hpp"

namespace mindprint::synth {

using json = nlohmann::ordered_json;

namespace {

void check_range(const CountRange& r, const char* name, std::size_t min_lo) {
  if (r.lo < min_lo || r.lo > r.hi) {
    throw ConfigError(std::string(name) + " must satisfy " + std::to_string(min_lo) +
                      " <= lo <= hi");
  }
}

std::size_t draw(Rng& rng, const CountRange& r) { return r.lo + rng.uniform_index(r.hi - r.lo + 1); }

Timestamp draw_ts(Rng& rng, Timestamp lo, Timestamp hi) {
  return lo + static_cast<Timestamp>(rng.uniform_index(static_cast<std::size_t>(hi - lo + 1)));
}

std::string make_body(Rng& rng, std::size_t tokens, const SignalSpec& spec,
                      const std::map<std::string, double>& rates) {
  std::string body;
  for (std::size_t t = 0; t < tokens; ++t) {
    const double u = rng.uniform01();
    double acc = 0.0;
    const std::string* word = nullptr;
    for (const auto& [cat, rate] : rates) {
      acc += rate;
      if (u < acc) {
        const auto& words = spec.category_words.at(cat);
        word = &words[rng.uniform_index(words.size())];
        break;
      }
    }
    if (!word) word = &spec.vocab[rng.uniform_index(spec.vocab.size())];
    if (!body.empty()) body += ' ';
    body += *word;
  }
  return body;
}

json range_json(const CountRange& r) { return json::array({r.lo, r.hi}); }

CountRange range_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("ranges are [lo, hi] arrays");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

}  // namespace

void SignalSpec::validate() const {
  if (n_users_pos == 0 || n_users_neg == 0) throw ConfigError("synth needs users of both classes");
  if (communities.empty()) throw ConfigError("synth needs at least one community");
  for (const auto& c : communities) {
    if (c.empty() || c == target_community) {
      throw ConfigError("community names must be non-empty and differ from the target");
    }
  }
  if (target_community.empty()) throw ConfigError("target community must be named");
  check_range(comments_per_user, "comments_per_user", 4);
  check_range(tokens_per_comment, "tokens_per_comment", 1);
  check_range(target_comments, "target_comments", 1);
  if (vocab.empty()) throw ConfigError("synth vocabulary is empty");
  if (!(start_utc > 0 && start_utc < end_utc)) throw ConfigError("synth time range is invalid");
  if (end_utc - start_utc < 1000) throw ConfigError("synth time range is too short");
  if (!(tau_quantile > 0.0 && tau_quantile < 1.0)) {
    throw ConfigError("tau_quantile must lie in (0, 1)");
  }
  if (!(tau_jitter >= 0.0 && tau_jitter < 0.5)) throw ConfigError("tau_jitter must lie in [0, 0.5)");

  double sum_pos = 0, sum_neg = 0, sum_post = 0;
  for (const auto& [cat, r] : planted) {
    if (!(r.rate_pos >= 0 && r.rate_pos <= 1 && r.rate_neg >= 0 && r.rate_neg <= 1)) {
      throw ConfigError("rates for '" + cat + "' must lie in [0, 1]");
    }
    const auto w = category_words.find(cat);
    if (w == category_words.end() || w->second.empty()) {
      throw ConfigError("planted category '" + cat + "' has no words");
    }
    sum_pos += r.rate_pos;
    sum_neg += r.rate_neg;
    const auto s = pre_post_shift.find(cat);
    const double post = r.rate_pos + (s == pre_post_shift.end() ? 0.0 : s->second);
    if (post < -1e-12 || post > 1 + 1e-12) {
      throw ConfigError("post-engagement rate for '" + cat + "' leaves [0, 1]");
    }
    sum_post += std::clamp(post, 0.0, 1.0);
  }
  for (const auto& [cat, delta] : pre_post_shift) {
    if (!planted.contains(cat)) throw ConfigError("shift for unplanted category '" + cat + "'");
    (void)delta;
  }
  if (sum_pos > 1 + 1e-12 || sum_neg > 1 + 1e-12 || sum_post > 1 + 1e-12) {
    throw ConfigError("planted rates sum above 1");
  }
}

SignalSpec SignalSpec::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false, true);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("synth spec is not a JSON object");
  static const std::set<std::string> kKnown{
      "n_users_pos",     "n_users_neg",    "communities",    "target_community",
      "comments_per_user", "tokens_per_comment", "target_comments", "vocab",
      "planted",         "category_words", "pre_post_shift", "start_utc",
      "end_utc",         "tau_quantile",   "tau_jitter",     "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.count(key)) throw ConfigError("unknown key '" + key + "' in synth spec");
  }
  SignalSpec s;
  try {
    s.n_users_pos = j.value("n_users_pos", s.n_users_pos);
    s.n_users_neg = j.value("n_users_neg", s.n_users_neg);
    s.communities = j.value("communities", s.communities);
    s.target_community = j.value("target_community", s.target_community);
    if (j.contains("comments_per_user")) s.comments_per_user = range_from(j["comments_per_user"]);
    if (j.contains("tokens_per_comment")) {
      s.tokens_per_comment = range_from(j["tokens_per_comment"]);
    }
    if (j.contains("target_comments")) s.target_comments = range_from(j["target_comments"]);
    s.vocab = j.value("vocab", default_vocab());
    if (j.contains("planted")) {
      for (const auto& [cat, r] : j["planted"].items()) {
        s.planted[cat] = PlantedRate{r.at(0).get<double>(), r.at(1).get<double>()};
      }
    }
    s.category_words =
        j.value("category_words", std::map<std::string, std::vector<std::string>>{});
    s.pre_post_shift = j.value("pre_post_shift", std::map<std::string, double>{});
    s.start_utc = j.value("start_utc", s.start_utc);
    s.end_utc = j.value("end_utc", s.end_utc);
    s.tau_quantile = j.value("tau_quantile", s.tau_quantile);
    s.tau_jitter = j.value("tau_jitter", s.tau_jitter);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  return s;
}

std::string SignalSpec::to_json() const {
  json j;
  j["n_users_pos"] = n_users_pos;
  j["n_users_neg"] = n_users_neg;
  j["communities"] = communities;
  j["target_community"] = target_community;
  j["comments_per_user"] = range_json(comments_per_user);
  j["tokens_per_comment"] = range_json(tokens_per_comment);
  j["target_comments"] = range_json(target_comments);
  j["vocab"] = vocab;
  j["planted"] = json::object();
  for (const auto& [cat, r] : planted) j["planted"][cat] = {r.rate_pos, r.rate_neg};
  j["category_words"] = category_words;
  j["pre_post_shift"] = pre_post_shift;
  j["start_utc"] = start_utc;
  j["end_utc"] = end_utc;
  j["tau_quantile"] = tau_quantile;
  j["tau_jitter"] = tau_jitter;
  j["seed"] = seed;
  return j.dump(2);
}

std::vector<std::string> default_vocab() {
  static const char* const kOnsets[] = {"z", "q", "x", "v", "j", "zh", "kv", "dz"};
  static const char* const kNuclei[] = {"a", "o", "u", "y", "e"};
  static const char* const kCodas[] = {"", "x", "q", "z", "v"};
  std::vector<std::string> out;
  for (const char* on : kOnsets) {
    for (const char* nu : kNuclei) {
      for (const char* co : kCodas) {
        out.push_back(std::string(on) + nu + "ru" + co);
      }
    }
  }
  return out;
}

void bind_lexicon(SignalSpec& spec, const lexicon::Lexicon& lexicon) {
  for (const auto& [cat, rate] : spec.planted) {
    (void)rate;
    const auto k = lexicon.category_index(cat);
    if (!k) throw ConfigError("planted category '" + cat + "' is not in the dictionary");
    auto& words = spec.category_words[cat];
    if (!words.empty()) continue;
    for (const auto& [word, cats] : lexicon.exact_entries()) {
      if (cats.size() != 1 || cats[0] != *k) continue;
      bool only = true;
      lexicon.for_each_match(word, [&](std::size_t hit) { only = only && hit == *k; });
      if (only && lexicon::tokenize(word) == std::vector<std::string>{word}) words.push_back(word);
    }
    if (words.empty()) {
      throw ConfigError("dictionary has no single-category word for '" + cat + "'");
    }
  }
  for (const auto& w : spec.vocab) {
    bool hit = false;
    for (const auto& tok : lexicon::tokenize(w)) {
      lexicon.for_each_match(tok, [&](std::size_t) { hit = true; });
    }
    if (hit) throw ConfigError("vocabulary word '" + w + "' matches a dictionary category");
  }
}

std::string to_ndjson_line(const corpus::Comment& c) {
  json j;
  j["id"] = c.id;
  j["author"] = c.author;
  j["subreddit"] = c.community;
  j["created_utc"] = c.created_utc;
  j["body"] = c.body;
  return j.dump();
}

std::string SynthCorpus::manifest_json() const {
  json j;
  j["spec"] = json::parse(spec.to_json());
  j["n_comments"] = comments.size();
  j["users"] = json::array();
  for (const auto& u : users) {
    json ju;
    ju["author"] = u.author;
    ju["label"] = u.label;
    ju["tau"] = u.tau ? json(*u.tau) : json(nullptr);
    ju["rate_pre"] = u.rate_pre;
    ju["rate_post"] = u.rate_post;
    j["users"].push_back(std::move(ju));
  }
  return j.dump(2);
}

SynthCorpus generate_corpus(const SignalSpec& spec, std::size_t workers) {
  spec.validate();
  const std::size_t n_users = spec.n_users_pos + spec.n_users_neg;
  const Timestamp span = spec.end_utc - spec.start_utc;

  // Author numbers are a seeded permutation so names carry no label.
  std::vector<std::size_t> number(n_users);
  for (std::size_t i = 0; i < n_users; ++i) number[i] = i;
  Rng name_rng(derive_seed(spec.seed, "names"));
  name_rng.shuffle(std::span<std::size_t>(number));

  std::vector<UserTruth> truth(n_users);
  std::vector<std::vector<corpus::Comment>> per_user(n_users);
  parallel_for(n_users, workers, [&](std::size_t u) {
    Rng rng(derive_seed(spec.seed, u));
    const bool positive = u < spec.n_users_pos;
    char name[32];
    std::snprintf(name, sizeof name, "user_%06zu", number[u]);
    UserTruth& t = truth[u];
    t.author = name;
    t.label = positive ? 1 : 0;
    for (const auto& [cat, r] : spec.planted) {
      t.rate_pre[cat] = positive ? r.rate_pos : r.rate_neg;
      double post = t.rate_pre[cat];
      if (positive) {
        const auto s = spec.pre_post_shift.find(cat);
        if (s != spec.pre_post_shift.end()) post = std::clamp(post + s->second, 0.0, 1.0);
      }
      t.rate_post[cat] = post;
    }

    Timestamp tau = 0;
    if (positive) {
      const double q = spec.tau_quantile + rng.uniform(-spec.tau_jitter, spec.tau_jitter);
      const double lo = 0.05, hi = 0.95;
      tau = spec.start_utc +
            static_cast<Timestamp>(std::clamp(q, lo, hi) * static_cast<double>(span));
      t.tau = tau;
    }

    auto& out = per_user[u];
    std::size_t serial = 0;
    auto emit = [&](const std::string& community, Timestamp ts,
                    const std::map<std::string, double>& rates) {
      const std::size_t n_tokens = draw(rng, spec.tokens_per_comment);
      char id[48];
      std::snprintf(id, sizeof id, "s%06zu_%05zu", number[u], serial++);
      out.push_back(corpus::Comment{id, t.author, community, ts,
                                    make_body(rng, n_tokens, spec, rates)});
    };

    for (const auto& community : spec.communities) {
      const std::size_t n = draw(rng, spec.comments_per_user);
      if (!positive) {
        for (std::size_t k = 0; k < n; ++k) {
          emit(community, draw_ts(rng, spec.start_utc, spec.end_utc), t.rate_pre);
        }
        continue;
      }
      const double share =
          static_cast<double>(tau - spec.start_utc) / static_cast<double>(span);
      const auto n_pre = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(share * static_cast<double>(n))), 2, n - 2);
      for (std::size_t k = 0; k < n; ++k) {
        if (k < n_pre) {
          emit(community, draw_ts(rng, spec.start_utc, tau - 1), t.rate_pre);
        } else {
          emit(community, draw_ts(rng, tau + 1, spec.end_utc), t.rate_post);
        }
      }
    }
    if (positive) {
      const std::size_t n = draw(rng, spec.target_comments);
      for (std::size_t k = 0; k < n; ++k) {
        emit(spec.target_community, k == 0 ? tau : draw_ts(rng, tau + 1, spec.end_utc),
             t.rate_post);
      }
    }
  });

  SynthCorpus result;
  result.spec = spec;
  for (auto& v : per_user) {
    for (auto& c : v) result.comments.push_back(std::move(c));
  }
  std::sort(result.comments.begin(), result.comments.end(),
            [](const corpus::Comment& a, const corpus::Comment& b) {
              return a.created_utc != b.created_utc ? a.created_utc < b.created_utc : a.id < b.id;
            });
  result.users = std::move(truth);
  std::sort(result.users.begin(), result.users.end(),
            [](const UserTruth& a, const UserTruth& b) { return a.author < b.author; });
  return result;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::string text;
  for (const auto& c : corpus.comments) {
    text += to_ndjson_line(c);
    text += '\n';
  }
  write_text_file(dir / "comments.ndjson", text);
  write_text_file(dir / "manifest.json", corpus.manifest_json() + "\n");
}

}  // namespace mindprint::synth
