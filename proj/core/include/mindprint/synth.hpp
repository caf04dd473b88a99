// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_SYNTH_HPP_
#define MINDPRINT_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mindprint/corpus.hpp"
#include "mindprint/lexicon.hpp"

namespace mindprint::synth {

using corpus::Timestamp;

struct CountRange {
  std::size_t lo = 0;
  std::size_t hi = 0;  // inclusive
};

struct PlantedRate {
  double rate_pos = 0.0;
  double rate_neg = 0.0;
};

// Ground truth for a synthetic corpus. Every user comments in every
// mainstream community; positives also comment in the target community,
// first at their engagement time tau and afterwards. Each token is a word
// of planted category c with probability rate(c) (categories tried in name
// order), otherwise a base vocabulary word.
struct SignalSpec {
  std::size_t n_users_pos = 50;
  std::size_t n_users_neg = 50;
  std::vector<std::string> communities{"alpha"};
  std::string target_community = "target";
  CountRange comments_per_user{20, 40};  // per mainstream community
  CountRange tokens_per_comment{20, 40};
  CountRange target_comments{1, 5};  // positives only
  std::vector<std::string> vocab;
  std::map<std::string, PlantedRate> planted;
  // Words that hit each planted category; filled from a lexicon by
  // bind_lexicon() when empty.
  std::map<std::string, std::vector<std::string>> category_words;
  // Rate delta added for positives after tau.
  std::map<std::string, double> pre_post_shift;
  Timestamp start_utc = 1420070400;  // 2015-01-01
  Timestamp end_utc = 1577836799;    // 2019-12-31
  double tau_quantile = 0.5;
  double tau_jitter = 0.1;  // fraction of the time range
  std::uint64_t seed = 1;

  // Throws ConfigError for infeasible specs: no users, no vocabulary, rates
  // outside [0,1] or summing above 1, a planted category without words,
  // bad ranges, or a quantile outside (0,1).
  void validate() const;

  static SignalSpec from_json(const std::string& text);
  std::string to_json() const;
};

// A small neutral vocabulary none of whose words carry a category in the
// bundled demo dictionary.
std::vector<std::string> default_vocab();

// Fills empty category_words from single-category exact entries of
// `lexicon`, and checks that no base vocabulary word hits any category.
// Throws ConfigError on an unknown category or a polluting vocab word.
void bind_lexicon(SignalSpec& spec, const lexicon::Lexicon& lexicon);

struct UserTruth {
  std::string author;
  std::uint8_t label = 0;
  std::optional<Timestamp> tau;
  std::map<std::string, double> rate_pre;   // per planted category
  std::map<std::string, double> rate_post;  // equal to rate_pre for negatives
};

struct SynthCorpus {
  std::vector<corpus::Comment> comments;  // sorted by (created_utc, id)
  std::vector<UserTruth> users;           // sorted by author
  std::string manifest_json() const;
  SignalSpec spec;
};

SynthCorpus generate_corpus(const SignalSpec& spec, std::size_t workers = 1);

// comments.ndjson and manifest.json under `dir`.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

std::string to_ndjson_line(const corpus::Comment& comment);

}  // namespace mindprint::synth

#endif  // MINDPRINT_SYNTH_HPP_
