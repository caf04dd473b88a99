// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mindprint/corpus.hpp"
#include "mindprint/error.hpp"
#include "mindprint/lexicon.hpp"
#include "mindprint/synth.hpp"
#include "test_util.hpp"

namespace mindprint::synth {
namespace {

lexicon::Lexicon demo_lexicon() {
  return lexicon::load_lexicon(std::string(MINDPRINT_SOURCE_DIR) + "/data/demo.dic");
}

SignalSpec small_spec() {
  SignalSpec s;
  s.n_users_pos = 20;
  s.n_users_neg = 30;
  s.communities = {"news", "sports"};
  s.target_community = "conspiracy";
  s.vocab = default_vocab();
  s.planted = {{"certain", {0.06, 0.02}}, {"power", {0.03, 0.03}}};
  s.seed = 5;
  bind_lexicon(s, demo_lexicon());
  return s;
}

TEST(Synth, DefaultVocabIsNeutral) {
  const auto lex = demo_lexicon();
  const auto vocab = default_vocab();
  EXPECT_GE(vocab.size(), 20u);
  for (const auto& w : vocab) {
    const auto fv = lexicon::featurize_comment(lex, w);
    EXPECT_EQ(fv.token_count, 1u) << w;
    for (double v : fv.values) EXPECT_EQ(v, 0.0) << w;
  }
}

TEST(Synth, BindLexiconChecks) {
  auto s = small_spec();
  EXPECT_FALSE(s.category_words.at("certain").empty());
  SignalSpec bad = small_spec();
  bad.planted["nonexistent"] = {0.01, 0.01};
  bad.category_words.clear();
  EXPECT_THROW(bind_lexicon(bad, demo_lexicon()), ConfigError);
  SignalSpec polluted = small_spec();
  polluted.vocab.push_back("we");
  EXPECT_THROW(bind_lexicon(polluted, demo_lexicon()), ConfigError);
}

TEST(Synth, ValidateRejectsInfeasibleSpecs) {
  auto s = small_spec();
  EXPECT_NO_THROW(s.validate());
  auto t = s;
  t.planted["certain"].rate_pos = 1.5;
  EXPECT_THROW(t.validate(), ConfigError);
  t = s;
  t.planted["certain"].rate_pos = 0.99;
  EXPECT_THROW(t.validate(), ConfigError);
  t = s;
  t.n_users_pos = 0;
  t.n_users_neg = 0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = s;
  t.tau_quantile = 1.0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = s;
  t.comments_per_user = {10, 5};
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Synth, JsonRoundTrip) {
  const auto s = small_spec();
  const auto back = SignalSpec::from_json(s.to_json());
  EXPECT_EQ(back.to_json(), s.to_json());
  EXPECT_THROW(SignalSpec::from_json(R"({"n_users_pos": 3, "bogus": 1})"), ConfigError);
}

TEST(Synth, DeterministicAcrossWorkers) {
  const auto s = small_spec();
  const auto a = generate_corpus(s, 1);
  const auto b = generate_corpus(s, 3);
  EXPECT_EQ(a.comments, b.comments);
  EXPECT_EQ(a.manifest_json(), b.manifest_json());
  auto other = s;
  other.seed = 6;
  EXPECT_NE(generate_corpus(other).comments, a.comments);
}

TEST(Synth, StructureMatchesSpec) {
  const auto s = small_spec();
  const auto c = generate_corpus(s);
  ASSERT_EQ(c.users.size(), 50u);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < c.comments.size(); ++i) {
    EXPECT_TRUE(ids.insert(c.comments[i].id).second);
    if (i > 0) {
      const auto& p = c.comments[i - 1];
      const auto& q = c.comments[i];
      EXPECT_TRUE(p.created_utc < q.created_utc || (p.created_utc == q.created_utc && p.id < q.id));
    }
  }
  const auto index = corpus::build_activity_index(c.comments, s.target_community);
  for (const auto& u : c.users) {
    for (const auto& comm : s.communities) {
      const auto n = index.count(u.author, comm);
      EXPECT_GE(n, static_cast<std::int64_t>(s.comments_per_user.lo));
      EXPECT_LE(n, static_cast<std::int64_t>(s.comments_per_user.hi));
    }
    if (u.label) {
      ASSERT_TRUE(u.tau.has_value());
      EXPECT_EQ(index.first_target_ts(u.author), u.tau);
      EXPECT_GE(index.target_count(u.author), static_cast<std::int64_t>(s.target_comments.lo));
    } else {
      EXPECT_FALSE(u.tau.has_value());
      EXPECT_EQ(index.target_count(u.author), 0);
    }
  }
}

TEST(Synth, PlantedRatesWithinThreeSigma) {
  auto s = small_spec();
  s.n_users_pos = 60;
  s.n_users_neg = 60;
  const auto c = generate_corpus(s);
  std::map<std::string, std::uint8_t> label;
  for (const auto& u : c.users) label[u.author] = u.label;
  std::set<std::string> certain(s.category_words.at("certain").begin(),
                                s.category_words.at("certain").end());
  double tokens[2] = {0, 0}, hits[2] = {0, 0};
  for (const auto& cm : c.comments) {
    if (cm.community == s.target_community) continue;
    for (const auto& t : lexicon::tokenize(cm.body)) {
      const int l = label.at(cm.author);
      tokens[l] += 1;
      hits[l] += certain.count(t);
    }
  }
  const double rate[2] = {0.02, 0.06};
  for (int l = 0; l < 2; ++l) {
    const double sd = std::sqrt(tokens[l] * rate[l] * (1 - rate[l]));
    EXPECT_NEAR(hits[l], tokens[l] * rate[l], 3 * sd) << l;
  }
}

TEST(Synth, NdjsonRoundTripWithoutMalformedLines) {
  testing::TempDir dir;
  const auto c = generate_corpus(small_spec());
  write_corpus(c, dir.path());
  const auto read = corpus::read_comments_file(dir / "comments.ndjson");
  EXPECT_EQ(read.stats.malformed, 0u);
  EXPECT_EQ(read.comments, c.comments);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
}

}  // namespace
}  // namespace mindprint::synth
