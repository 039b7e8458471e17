// Copyright 2026 The olr-toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// olr: command-line driver for the language recognition pipeline.
//
//   olr synth    [--config c.json] [--seed N] [--corpus-dir DIR] [synth options]
//   olr train    [--config c.json] [--seed N] [--workers N] [--work-dir DIR]
//   olr score    [--config c.json] [--manifest M] ...
//   olr evaluate --scores S --manifest M [--out STEM] [--label NAME]
//   olr baseline [--config c.json] [--synth] ...
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure,
// 1 anything else.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "olr/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string work_dir;
  std::string corpus_dir;
  bool quiet = false;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)");
  cmd->add_option("--seed", o.seed, "Master RNG seed (overrides config)");
  cmd->add_option("--workers", o.workers, "Worker threads");
  cmd->add_option("--work-dir", o.work_dir, "Directory for models, scores and reports");
  cmd->add_option("--corpus-dir", o.corpus_dir, "Corpus directory (holds manifest.txt)");
  cmd->add_flag("-q,--quiet", o.quiet, "Only print errors");
  cmd->add_flag("-v,--verbose", o.verbose, "Per-iteration training logs");
}

olr::RunConfig resolve_config(const CommonOptions& o) {
  olr::RunConfig cfg = o.config.empty() ? olr::RunConfig{} : olr::load_run_config(o.config);
  olr::apply_env_overrides(cfg);
  if (o.seed) cfg.apply_seed(*o.seed);
  if (o.workers) cfg.workers = *o.workers;
  if (!o.work_dir.empty()) cfg.work_dir = o.work_dir;
  if (!o.corpus_dir.empty()) cfg.corpus_dir = o.corpus_dir;
  if (o.quiet) olr::set_log_level(olr::LogLevel::kQuiet);
  if (o.verbose) olr::set_log_level(olr::LogLevel::kDebug);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spoken language recognition toolkit: i-vector baseline and evaluation harness"};
  app.require_subcommand(1);
  CommonOptions common;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic multilingual corpus");
  add_common(synth, common);
  std::optional<std::size_t> n_languages, n_train, n_test, n_utts;
  std::optional<double> seconds, separation, noisy, snr;
  synth->add_option("--languages", n_languages, "Number of languages (1-7)");
  synth->add_option("--train-speakers", n_train, "Training speakers per language");
  synth->add_option("--test-speakers", n_test, "Test speakers per language");
  synth->add_option("--utts", n_utts, "Utterances per speaker");
  synth->add_option("--seconds", seconds, "Utterance duration in seconds");
  synth->add_option("--separation", separation, "Language separation (> 0)");
  synth->add_option("--noisy-fraction", noisy, "Fraction of noisy-session utterances");
  synth->add_option("--snr", snr, "Noisy-session SNR in dB");

  auto* train = app.add_subcommand("train", "Train UBM, TV matrix, LDA and back-ends");
  add_common(train, common);

  auto* score = app.add_subcommand("score", "Write score files for a manifest's test split");
  add_common(score, common);
  std::string score_manifest;
  score->add_option("--manifest", score_manifest, "Manifest to score (default: corpus manifest)");

  auto* evaluate = app.add_subcommand("evaluate", "Compute Cavg, EER, minDCF, IDR and DET for a score file");
  add_common(evaluate, common);
  std::string eval_scores, eval_manifest, eval_out, eval_label = "system";
  std::optional<double> p_target;
  evaluate->add_option("--scores", eval_scores, "Score file")->required();
  evaluate->add_option("--manifest", eval_manifest, "Manifest with test truth labels (default: corpus manifest)");
  evaluate->add_option("--out", eval_out, "Output stem for .txt/.kv/.det reports");
  evaluate->add_option("--label", eval_label, "Row label in the results table");
  evaluate->add_option("--p-target", p_target, "Target prior");

  auto* baseline = app.add_subcommand("baseline", "synth (optional) -> train -> score -> evaluate");
  add_common(baseline, common);
  bool force_synth = false;
  baseline->add_flag("--synth", force_synth, "Regenerate the synthetic corpus first");

  CLI11_PARSE(app, argc, argv);

  try {
    olr::RunConfig cfg = resolve_config(common);
    if (synth->parsed()) {
      if (n_languages) cfg.synth.n_languages = *n_languages;
      if (n_train) cfg.synth.speakers_per_language_train = *n_train;
      if (n_test) cfg.synth.speakers_per_language_test = *n_test;
      if (n_utts) cfg.synth.utts_per_speaker = *n_utts;
      if (seconds) cfg.synth.utt_seconds = *seconds;
      if (separation) cfg.synth.language_separation = *separation;
      if (noisy) cfg.synth.noisy_fraction = *noisy;
      if (snr) cfg.synth.snr_db = *snr;
      const auto manifest = olr::cmd_synth(cfg);
      std::cout << "wrote " << manifest.records.size() << " segments to " << cfg.manifest_path().string() << '\n';
    } else if (train->parsed()) {
      const auto summary = olr::cmd_train(cfg);
      for (const auto& f : summary.outputs) std::cout << f << '\n';
    } else if (score->parsed()) {
      const auto manifest = olr::load_manifest(score_manifest.empty() ? cfg.manifest_path() : std::filesystem::path(score_manifest));
      for (const auto& f : olr::cmd_score(cfg, manifest)) std::cout << f << '\n';
    } else if (evaluate->parsed()) {
      if (p_target) cfg.metrics.p_target = *p_target;
      cfg.metrics.validate();
      const auto manifest = olr::load_manifest(eval_manifest.empty() ? cfg.manifest_path() : std::filesystem::path(eval_manifest));
      const auto report = olr::cmd_evaluate(eval_scores, manifest, cfg.metrics, eval_out, eval_label);
      std::cout << olr::format_table({std::pair<std::string, olr::MetricReport>{eval_label, report}});
      std::cout << "lost trials: " << report.lost << " of " << report.segments << '\n';
    } else if (baseline->parsed()) {
      const auto result = olr::cmd_baseline(cfg, force_synth);
      std::cout << result.table;
    }
  } catch (const olr::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const olr::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const olr::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
