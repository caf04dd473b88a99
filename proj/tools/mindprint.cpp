// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0
//
// mindprint: command-line driver for the pipeline stages.
//
//   mindprint ingest --input dump.ndjson.zst --target conspiracy --out run/
//   mindprint study-one --config configs/demo.json
//   mindprint report --config configs/demo.json --verify

#include <ctime>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mindprint/config.hpp"
#include "mindprint/csv.hpp"
#include "mindprint/error.hpp"
#include "mindprint/lexicon.hpp"
#include "mindprint/pipeline.hpp"
#include "mindprint/synth.hpp"

namespace fs = std::filesystem;
using mindprint::ConfigError;
using mindprint::DataError;
using mindprint::pipeline::PipelineConfig;

namespace {

struct CommonFlags {
  std::string config;
  std::vector<std::string> inputs;
  std::string dictionary;
  std::string bots;
  std::string from;
  std::string to;
  std::string target;
  std::vector<std::string> communities;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Pipeline config (JSON)");
  cmd->add_option("--input", f.inputs, "Comment dump (.ndjson or .ndjson.zst); repeatable");
  cmd->add_option("--dictionary", f.dictionary, "Category dictionary (.dic)");
  cmd->add_option("--bots", f.bots, "Bot list, one author per line");
  cmd->add_option("--from", f.from, "First kept timestamp (UTC seconds or YYYY-MM-DD)");
  cmd->add_option("--to", f.to, "Last kept timestamp (UTC seconds or YYYY-MM-DD, inclusive)");
  cmd->add_option("--target", f.target, "Target community");
  cmd->add_option("--communities", f.communities, "Mainstream communities")->delimiter(',');
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--workers", f.workers, "Worker threads (0 = all cores)");
  cmd->add_flag("-q,--quiet", f.quiet, "Suppress progress output");
}

std::int64_t parse_time(const std::string& text, bool end_of_day) {
  if (!text.empty() && text.find('-') == std::string::npos) {
    return mindprint::parse_int(text);
  }
  std::tm tm{};
  std::istringstream in(text);
  in >> std::get_time(&tm, "%Y-%m-%d");
  if (in.fail()) throw ConfigError("cannot parse date '" + text + "'; use YYYY-MM-DD or UTC seconds");
  std::int64_t t = timegm(&tm);
  return end_of_day ? t + 86399 : t;
}

PipelineConfig build_config(const CommonFlags& f) {
  PipelineConfig c = f.config.empty() ? PipelineConfig{} : PipelineConfig::load(f.config);
  if (!f.inputs.empty()) {
    c.inputs.assign(f.inputs.begin(), f.inputs.end());
    c.input_labels = f.inputs;
  }
  if (!f.dictionary.empty()) {
    c.dictionary = f.dictionary;
    c.dictionary_label = f.dictionary;
  }
  if (!f.bots.empty()) {
    c.bots = fs::path(f.bots);
    c.bots_label = f.bots;
  }
  if (!f.from.empty()) c.filters.start_utc = parse_time(f.from, false);
  if (!f.to.empty()) c.filters.end_utc = parse_time(f.to, true);
  if (!f.target.empty()) c.target = f.target;
  if (!f.communities.empty()) c.communities = f.communities;
  if (!f.out.empty()) c.out_dir = f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.workers) c.workers = *f.workers;
  if (c.out_dir.empty()) throw ConfigError("no output directory; pass --out or set paths.out_dir");
  return c;
}

mindprint::pipeline::Log make_log(bool quiet) {
  if (quiet) return {};
  return [](std::string_view line) { std::cerr << line << '\n'; };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mindprint: group-level psycholinguistic fingerprints in comment corpora"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MINDPRINT_VERSION));

  CommonFlags flags;
  using Stage = void (*)(const PipelineConfig&, const mindprint::pipeline::Log&);
  struct StageCmd {
    const char* name;
    const char* help;
    Stage fn;
  };
  namespace mp = mindprint::pipeline;
  const std::vector<StageCmd> stages{
      {"ingest", "Stream, filter and index the comment dumps", mp::run_ingest},
      {"featurize", "Per-comment category vectors and per-user embeddings", mp::run_featurize},
      {"dataset", "Balanced labeled datasets per community, bucket and resample", mp::run_dataset},
      {"train", "Grid search, forest training and test accuracy", mp::run_train},
      {"permtest", "Label-permutation significance tests", mp::run_permtest},
      {"shap", "Mean |SHAP| importance vectors", mp::run_shap},
      {"cluster", "Cosine similarity, UPGMA dendrogram and PCA", mp::run_cluster},
      {"prepost", "Pre- vs post-engagement classifiers", mp::run_prepost},
      {"windows", "Activity-window and exclusion-window curves", mp::run_windows},
      {"siamese", "Siamese network over pre/post halves", mp::run_siamese},
      {"study-one", "ingest through cluster, skipping finished stages", mp::run_study_one},
      {"study-two", "prepost, windows and siamese plus prerequisites", mp::run_study_two},
  };
  std::vector<std::pair<CLI::App*, Stage>> stage_cmds;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, flags);
    stage_cmds.emplace_back(cmd, s.fn);
  }

  auto* run = app.add_subcommand("run", "Both studies followed by the report");
  add_common(run, flags);

  bool verify = false;
  auto* report = app.add_subcommand("report", "Write or verify manifest.json");
  add_common(report, flags);
  report->add_flag("--verify", verify, "Check every file hash against the manifest");

  std::string spec_path, synth_out, synth_dict;
  std::size_t synth_workers = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted signal");
  synth->add_option("--spec", spec_path, "Signal spec (JSON)")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--dictionary", synth_dict, "Dictionary supplying category words");
  synth->add_option("--workers", synth_workers, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      auto spec = mindprint::synth::SignalSpec::from_json(mindprint::read_text_file(spec_path));
      if (!synth_dict.empty()) {
        mindprint::synth::bind_lexicon(spec, mindprint::lexicon::load_lexicon(synth_dict));
      }
      const auto corpus = mindprint::synth::generate_corpus(spec, synth_workers);
      mindprint::synth::write_corpus(corpus, synth_out);
      std::cout << (fs::path(synth_out) / "comments.ndjson").string() << '\n';
      return 0;
    }
    const auto config = build_config(flags);
    const auto log = make_log(flags.quiet);
    if (report->parsed()) {
      if (verify) {
        const auto result = mp::verify_report(config.out_dir);
        for (const auto& p : result.problems) std::cout << p << '\n';
        std::cout << (result.ok ? "OK" : "FAILED") << '\n';
        return result.ok ? 0 : 3;
      }
      std::cout << mp::run_report(config, log) << '\n';
      return 0;
    }
    if (run->parsed()) {
      mp::run_study_one(config, log);
      mp::run_study_two(config, log);
      std::cout << mp::run_report(config, log) << '\n';
      return 0;
    }
    for (const auto& [cmd, fn] : stage_cmds) {
      if (cmd->parsed()) {
        fn(config, log);
        return 0;
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
