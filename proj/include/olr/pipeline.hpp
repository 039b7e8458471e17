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

// End-to-end pipeline stages driven by a JSON run configuration:
// synth -> train -> score -> evaluate, and `baseline` chaining all of them.
//
// Work directory layout:
//   ubm.json tv.json lda.json          models
//   backend/<system>.json              scorer + calibration per system
//   ivectors/{train,test}.txt          i-vector dumps
//   scores/<system>.txt                submission files
//   reports/<system>.{txt,kv,det}      metric reports and DET data
//   report.txt                         results table (baseline)
//   <stage>.outputs                    files produced by each stage

#pragma once

#include <cstdlib>
#include <filesystem>
#include <set>

#include "olr/backend.hpp"
#include "olr/challenge.hpp"
#include "olr/common.hpp"
#include "olr/corpus.hpp"
#include "olr/features.hpp"
#include "olr/metrics.hpp"
#include "olr/tvspace.hpp"
#include "olr/ubm.hpp"

namespace olr {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Systems

enum class Scorer { kCosine, kSvm };

struct SystemSpec {
  std::string label;  // results-table row label
  std::string slug;   // file stem
  bool use_lda = false;
  Scorer scorer = Scorer::kCosine;
  KernelType kernel = KernelType::kLinear;
};

inline const std::vector<SystemSpec>& all_systems() {
  static const std::vector<SystemSpec> systems = {
      {"i-vector", "ivector", false, Scorer::kCosine, KernelType::kLinear},
      {"L-vector", "lvector", true, Scorer::kCosine, KernelType::kLinear},
      {"i-vector-SVM (Linear)", "ivector-svm-linear", false, Scorer::kSvm, KernelType::kLinear},
      {"i-vector-SVM (Poly)", "ivector-svm-poly", false, Scorer::kSvm, KernelType::kPoly},
      {"i-vector-SVM (RBF)", "ivector-svm-rbf", false, Scorer::kSvm, KernelType::kRbf},
      {"L-vector-SVM (Linear)", "lvector-svm-linear", true, Scorer::kSvm, KernelType::kLinear},
      {"L-vector-SVM (Poly)", "lvector-svm-poly", true, Scorer::kSvm, KernelType::kPoly},
      {"L-vector-SVM (RBF)", "lvector-svm-rbf", true, Scorer::kSvm, KernelType::kRbf},
  };
  return systems;
}

inline const SystemSpec& find_system(std::string_view name) {
  for (const auto& s : all_systems())
    if (s.slug == name || s.label == name) return s;
  throw ConfigError("unknown system '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Run configuration

enum class CalibrationMode { kUnitScale, kMaxLikelihoodScale };

struct BackendConfig {
  std::size_t lda_dim = 6;
  double svm_c = 1.0;
  bool length_normalize = true;
  double poly_gamma = 0.0;  // 0 = 1/dim
  double poly_coef0 = 1.0;
  int poly_degree = 3;
  double rbf_gamma = 0.0;   // 0 = 1/(dim * var)
  double smo_tolerance = 1e-3;
  std::size_t smo_max_iterations = 100000;
  CalibrationMode calibration = CalibrationMode::kMaxLikelihoodScale;

  KernelSpec kernel(KernelType type) const {
    KernelSpec k;
    k.type = type;
    if (type == KernelType::kPoly) {
      k.gamma = poly_gamma;
      k.coef0 = poly_coef0;
      k.degree = poly_degree;
    } else if (type == KernelType::kRbf) {
      k.gamma = rbf_gamma;
    }
    return k;
  }
};

struct RunConfig {
  fs::path corpus_dir = "corpus";
  fs::path manifest;  // defaults to corpus_dir/manifest.txt
  fs::path work_dir = "work";
  std::uint64_t rng_seed = 42;
  std::size_t workers = 1;
  SynthSpec synth;
  FeatureConfig features;
  EmConfig ubm;
  TvConfig tv;
  BackendConfig backend;
  MetricConfig metrics;
  std::vector<std::string> systems;  // empty = all

  fs::path manifest_path() const { return manifest.empty() ? corpus_dir / "manifest.txt" : manifest; }

  std::vector<SystemSpec> selected_systems() const {
    if (systems.empty()) return all_systems();
    std::vector<SystemSpec> out;
    for (const auto& s : systems) out.push_back(find_system(s));
    return out;
  }

  /// Derives stage seeds from rng_seed.
  void apply_seed(std::uint64_t seed) {
    rng_seed = seed;
    synth.rng_seed = seed;
    ubm.rng_seed = derive_seed(seed, 1);
    tv.rng_seed = derive_seed(seed, 2);
  }

  void validate() const {
    if (workers < 1) throw ConfigError("workers must be >= 1");
    synth.validate();
    features.validate();
    ubm.validate();
    if (tv.rank < 1 || tv.n_iterations < 1) throw ConfigError("tv.rank and tv.n_iterations must be >= 1");
    if (tv.rank > ubm.n_components * features.output_dim()) throw ConfigError("tv.rank exceeds supervector dimension");
    if (backend.lda_dim < 1) throw ConfigError("backend.lda_dim must be >= 1");
    if (!(backend.svm_c > 0.0)) throw ConfigError("backend.svm_c must be > 0");
    if (backend.poly_degree < 1) throw ConfigError("backend.poly_degree must be >= 1");
    if (backend.poly_gamma < 0.0 || backend.rbf_gamma < 0.0) throw ConfigError("kernel gamma must be >= 0");
    metrics.validate();
    for (const auto& s : systems) find_system(s);
  }
};

namespace detail {

inline void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& j) {
  RunConfig cfg;
  try {
    detail::check_keys(j,
                       {"corpus_dir", "manifest", "work_dir", "rng_seed", "workers", "synth", "features", "ubm", "tv",
                        "backend", "metrics", "systems"},
                       "config");
    cfg.corpus_dir = j.value("corpus_dir", cfg.corpus_dir.string());
    cfg.manifest = j.value("manifest", std::string());
    cfg.work_dir = j.value("work_dir", cfg.work_dir.string());
    cfg.workers = j.value("workers", cfg.workers);
    cfg.apply_seed(j.value("rng_seed", cfg.rng_seed));
    if (j.contains("synth")) {
      detail::check_keys(j["synth"],
                         {"n_languages", "speakers_per_language_train", "speakers_per_language_test", "utts_per_speaker",
                          "utt_seconds", "language_separation", "noisy_fraction", "snr_db", "rng_seed"},
                         "synth");
      from_json(j["synth"], cfg.synth);
    }
    if (j.contains("features")) {
      detail::check_keys(j["features"],
                         {"frame_length_ms", "frame_shift_ms", "pre_emphasis", "n_mel_filters", "n_cepstra",
                          "include_log_energy", "delta_window", "energy_floor", "low_freq_hz", "high_freq_hz", "cmvn"},
                         "features");
      from_json(j["features"], cfg.features);
    }
    if (j.contains("ubm")) {
      detail::check_keys(j["ubm"], {"n_components", "n_iterations", "variance_floor_factor", "init_subsample", "rng_seed"},
                         "ubm");
      from_json(j["ubm"], cfg.ubm);
    }
    if (j.contains("tv")) {
      detail::check_keys(j["tv"], {"rank", "n_iterations", "rng_seed"}, "tv");
      from_json(j["tv"], cfg.tv);
    }
    if (j.contains("backend")) {
      const Json& b = j["backend"];
      detail::check_keys(b,
                         {"lda_dim", "svm_c", "length_normalize", "poly_gamma", "poly_coef0", "poly_degree", "rbf_gamma",
                          "smo_tolerance", "smo_max_iterations", "calibration"},
                         "backend");
      auto& o = cfg.backend;
      o.lda_dim = b.value("lda_dim", o.lda_dim);
      o.svm_c = b.value("svm_c", o.svm_c);
      o.length_normalize = b.value("length_normalize", o.length_normalize);
      o.poly_gamma = b.value("poly_gamma", o.poly_gamma);
      o.poly_coef0 = b.value("poly_coef0", o.poly_coef0);
      o.poly_degree = b.value("poly_degree", o.poly_degree);
      o.rbf_gamma = b.value("rbf_gamma", o.rbf_gamma);
      o.smo_tolerance = b.value("smo_tolerance", o.smo_tolerance);
      o.smo_max_iterations = b.value("smo_max_iterations", o.smo_max_iterations);
      const std::string cal = b.value("calibration", std::string("ml_scale"));
      if (cal == "ml_scale") {
        o.calibration = CalibrationMode::kMaxLikelihoodScale;
      } else if (cal == "unit") {
        o.calibration = CalibrationMode::kUnitScale;
      } else {
        throw ConfigError("backend.calibration must be 'ml_scale' or 'unit'");
      }
    }
    if (j.contains("metrics")) {
      detail::check_keys(j["metrics"], {"p_target"}, "metrics");
      cfg.metrics.p_target = j["metrics"].value("p_target", cfg.metrics.p_target);
    }
    if (j.contains("systems")) cfg.systems = j["systems"].get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

/// Environment overrides: OLR_SEED, OLR_WORKERS, OLR_WORK_DIR, OLR_CORPUS_DIR.
inline void apply_env_overrides(RunConfig& cfg) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  auto to_u64 = [](const std::string& s, const char* name) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string(name) + " must be a non-negative integer");
    }
  };
  if (auto v = env("OLR_SEED")) cfg.apply_seed(to_u64(*v, "OLR_SEED"));
  if (auto v = env("OLR_WORKERS")) cfg.workers = to_u64(*v, "OLR_WORKERS");
  if (auto v = env("OLR_WORK_DIR")) cfg.work_dir = *v;
  if (auto v = env("OLR_CORPUS_DIR")) cfg.corpus_dir = *v;
}

inline RunConfig load_run_config(const fs::path& path) {
  Json j;
  try {
    j = read_json_file(path.string());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(j);
}

// ---------------------------------------------------------------------------
// Trained back-end per system

struct TrainedSystem {
  SystemSpec spec;
  LanguageMeans means;
  SvmModel svm;
  double calibration_scale = 1.0;

  Vector raw_scores(const Vector& input) const {
    return spec.scorer == Scorer::kCosine ? cosine_scores(means, input) : svm_scores(svm, input);
  }
};

inline Json to_json(const TrainedSystem& s) {
  Json j = make_envelope("Backend");
  j["system"] = s.spec.slug;
  j["label"] = s.spec.label;
  j["lda"] = s.spec.use_lda;
  j["calibration_scale"] = s.calibration_scale;
  j["scorer"] = s.spec.scorer == Scorer::kCosine ? to_json(s.means) : to_json(s.svm);
  return j;
}

inline TrainedSystem trained_system_from_json(const Json& j) {
  check_envelope(j, "Backend");
  TrainedSystem s;
  s.spec = find_system(j.at("system").get<std::string>());
  s.calibration_scale = j.at("calibration_scale").get<double>();
  if (s.spec.scorer == Scorer::kCosine) {
    s.means = language_means_from_json(j.at("scorer"));
  } else {
    s.svm = svm_model_from_json(j.at("scorer"));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Stage helpers

inline FeatureMatrix segment_features(const CorpusManifest& manifest, const SegmentRecord& rec, const FeatureConfig& cfg) {
  const Waveform wav = read_wav(manifest.resolve(rec));
  if (num_frames(wav.samples.size(), cfg) == 0)
    throw DataError("segment '" + rec.segment_id + "' is too short to yield a feature frame");
  return extract_features(wav, cfg);
}

inline std::vector<FeatureMatrix> split_features(const CorpusManifest& manifest, const std::vector<const SegmentRecord*>& recs,
                                                 const FeatureConfig& cfg) {
  std::vector<FeatureMatrix> out(recs.size());
  parallel_for(recs.size(), [&](std::size_t i) { out[i] = segment_features(manifest, *recs[i], cfg); });
  return out;
}

class OutputLog {
 public:
  explicit OutputLog(fs::path root) : root_(std::move(root)) {}
  void add(const fs::path& p) { files_.push_back(fs::relative(p, root_).generic_string()); }
  const std::vector<std::string>& files() const { return files_; }
  void write(const std::string& stage) const {
    std::ofstream out(root_ / (stage + ".outputs"), std::ios::binary);
    for (const auto& f : files_) out << f << '\n';
  }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

inline void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create directory '" + p.string() + "': " + ec.message());
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot open '" + p.string() + "' for writing");
  out << text;
  if (!out) throw DataError("write failed for '" + p.string() + "'");
}

// ---------------------------------------------------------------------------
// Stages

inline CorpusManifest cmd_synth(const RunConfig& cfg) {
  cfg.validate();
  set_num_workers(cfg.workers);
  log_info("synthesizing corpus in " + cfg.corpus_dir.string());
  return synth_corpus(cfg.synth, cfg.corpus_dir);
}

struct TrainSummary {
  std::vector<double> ubm_loglik;
  std::vector<double> tv_auxiliary;
  std::vector<std::string> outputs;
};

inline TrainSummary cmd_train(const RunConfig& cfg) {
  cfg.validate();
  set_num_workers(cfg.workers);
  const CorpusManifest manifest = load_manifest(cfg.manifest_path());
  const auto train = manifest.split(Split::kTrain);
  if (train.empty()) throw DataError("manifest has no training segments");
  const std::size_t n_classes = manifest.languages.size();
  if (n_classes < 2) throw DataError("training needs at least two languages");
  const auto systems = cfg.selected_systems();

  ensure_dir(cfg.work_dir / "backend");
  ensure_dir(cfg.work_dir / "ivectors");
  OutputLog outputs(cfg.work_dir);
  TrainSummary summary;

  log_info(strprintf("extracting features for %zu training segments", train.size()));
  const auto feats = split_features(manifest, train, cfg.features);

  log_info(strprintf("training UBM (K=%zu, %zu iterations)", cfg.ubm.n_components, cfg.ubm.n_iterations));
  const DiagGmm ubm = train_ubm(feats, cfg.ubm, &summary.ubm_loglik);
  write_json_file((cfg.work_dir / "ubm.json").string(), to_json(ubm));
  outputs.add(cfg.work_dir / "ubm.json");

  std::vector<SufficientStats> stats(feats.size());
  parallel_for(feats.size(), [&](std::size_t i) { stats[i] = accumulate_stats(ubm, feats[i]); });

  log_info(strprintf("training total-variability matrix (R=%zu, %zu iterations)", cfg.tv.rank, cfg.tv.n_iterations));
  const TVModel tv = train_tv(stats, ubm, cfg.tv, &summary.tv_auxiliary);
  write_json_file((cfg.work_dir / "tv.json").string(), to_json(tv));
  outputs.add(cfg.work_dir / "tv.json");

  const auto ws = extract_ivectors(tv, stats);
  std::vector<IVector> dump;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < train.size(); ++i) {
    dump.push_back({train[i]->segment_id, ws[i]});
    labels.push_back(manifest.column_of(train[i]->language));
  }
  write_ivectors(dump, cfg.work_dir / "ivectors" / "train.txt");
  outputs.add(cfg.work_dir / "ivectors" / "train.txt");

  if (cfg.backend.lda_dim > n_classes - 1)
    throw ConfigError(strprintf("backend.lda_dim %zu exceeds classes - 1 = %zu", cfg.backend.lda_dim, n_classes - 1));
  const LdaTransform lda = fit_lda(ws, labels, cfg.backend.lda_dim);
  write_json_file((cfg.work_dir / "lda.json").string(), to_json(lda));
  outputs.add(cfg.work_dir / "lda.json");
  std::vector<Vector> projected(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) projected[i] = project(lda, ws[i]);

  for (const auto& spec : systems) {
    const std::vector<Vector>& inputs = spec.use_lda ? projected : ws;
    TrainedSystem sys;
    sys.spec = spec;
    if (spec.scorer == Scorer::kCosine) {
      std::vector<Vector> normed;
      for (const auto& v : inputs) normed.push_back(cfg.backend.length_normalize ? length_normalize(v) : v);
      sys.means = compute_language_means(normed, labels, n_classes);
    } else {
      SvmConfig svm_cfg;
      svm_cfg.kernel = cfg.backend.kernel(spec.kernel);
      svm_cfg.c = cfg.backend.svm_c;
      svm_cfg.length_normalize = cfg.backend.length_normalize;
      svm_cfg.tolerance = cfg.backend.smo_tolerance;
      svm_cfg.max_iterations = cfg.backend.smo_max_iterations;
      sys.svm = train_svm_ovr(inputs, labels, n_classes, svm_cfg);
    }
    if (cfg.backend.calibration == CalibrationMode::kMaxLikelihoodScale) {
      std::vector<Vector> raw(inputs.size());
      for (std::size_t i = 0; i < inputs.size(); ++i) raw[i] = sys.raw_scores(inputs[i]);
      sys.calibration_scale = fit_calibration_scale(raw, labels);
    }
    log_info(strprintf("trained %s (calibration scale %.4g)", spec.label.c_str(), sys.calibration_scale));
    const fs::path out = cfg.work_dir / "backend" / (spec.slug + ".json");
    write_json_file(out.string(), to_json(sys));
    outputs.add(out);
  }
  outputs.write("train");
  summary.outputs = outputs.files();
  return summary;
}

/// Scores one segment's i-vector with no access to any other test segment.
inline Vector score_segment(const TrainedSystem& sys, const LdaTransform& lda, const Vector& ivector) {
  const Vector input = sys.spec.use_lda ? project(lda, ivector) : ivector;
  return calibrate_scores(sys.raw_scores(input), sys.calibration_scale);
}

/// Writes scores/<system>.txt for the test split of `manifest`.
inline std::vector<std::string> cmd_score(const RunConfig& cfg, const CorpusManifest& manifest) {
  cfg.validate();
  set_num_workers(cfg.workers);
  const TVModel tv = tv_model_from_json(read_json_file((cfg.work_dir / "tv.json").string()));
  const LdaTransform lda = lda_from_json(read_json_file((cfg.work_dir / "lda.json").string()));
  const auto test = manifest.split(Split::kTest);
  if (test.empty()) throw DataError("manifest has no test segments");
  ensure_dir(cfg.work_dir / "scores");
  ensure_dir(cfg.work_dir / "ivectors");
  OutputLog outputs(cfg.work_dir);

  log_info(strprintf("extracting i-vectors for %zu test segments", test.size()));
  std::vector<Vector> ws(test.size());
  {
    const TvEvaluator eval(tv);
    parallel_for(test.size(), [&](std::size_t i) {
      const FeatureMatrix f = segment_features(manifest, *test[i], cfg.features);
      ws[i] = eval.posterior(accumulate_stats(tv.ubm, f)).mean;
    });
  }
  std::vector<IVector> dump;
  for (std::size_t i = 0; i < test.size(); ++i) dump.push_back({test[i]->segment_id, ws[i]});
  write_ivectors(dump, cfg.work_dir / "ivectors" / "test.txt");
  outputs.add(cfg.work_dir / "ivectors" / "test.txt");

  for (const auto& spec : cfg.selected_systems()) {
    const TrainedSystem sys =
        trained_system_from_json(read_json_file((cfg.work_dir / "backend" / (spec.slug + ".json")).string()));
    if (sys.spec.scorer == Scorer::kCosine ? sys.means.num_classes() != manifest.languages.size()
                                           : sys.svm.num_classes() != manifest.languages.size())
      throw DataError("backend '" + spec.slug + "' was trained on a different language set");
    TrialScores trials;
    trials.languages = manifest.languages;
    for (std::size_t i = 0; i < test.size(); ++i)
      trials.add(test[i]->segment_id, score_segment(sys, lda, ws[i]), manifest.column_of(test[i]->language));
    const fs::path out = cfg.work_dir / "scores" / (spec.slug + ".txt");
    write_score_file(trials, out);
    outputs.add(out);
  }
  outputs.write("score");
  return outputs.files();
}

/// Evaluates one score file; writes <out_stem>.txt (table row), .kv and .det.
inline MetricReport cmd_evaluate(const fs::path& score_file, const CorpusManifest& manifest, const MetricConfig& metrics,
                                 const fs::path& out_stem, const std::string& label) {
  const MetricReport report = evaluate_submission(score_file, manifest, metrics);
  if (!out_stem.empty()) {
    if (out_stem.has_parent_path()) ensure_dir(out_stem.parent_path());
    write_text(fs::path(out_stem.string() + ".txt"), format_table({std::pair<std::string, MetricReport>{label, report}}));
    write_text(fs::path(out_stem.string() + ".kv"), format_key_values(report));
    write_text(fs::path(out_stem.string() + ".det"), format_det(report.det));
  }
  return report;
}

struct BaselineResult {
  std::vector<std::pair<std::string, MetricReport>> rows;
  std::string table;
};

/// Full pipeline. Synthesizes the corpus first when `synthesize` is set or no
/// manifest exists yet.
inline BaselineResult cmd_baseline(const RunConfig& cfg, bool synthesize) {
  cfg.validate();
  set_num_workers(cfg.workers);
  if (synthesize || !fs::exists(cfg.manifest_path())) cmd_synth(cfg);
  cmd_train(cfg);
  const CorpusManifest manifest = load_manifest(cfg.manifest_path());
  cmd_score(cfg, manifest);
  BaselineResult result;
  OutputLog outputs(cfg.work_dir);
  for (const auto& spec : cfg.selected_systems()) {
    const fs::path stem = cfg.work_dir / "reports" / spec.slug;
    result.rows.emplace_back(
        spec.label, cmd_evaluate(cfg.work_dir / "scores" / (spec.slug + ".txt"), manifest, cfg.metrics, stem, spec.label));
    for (const char* ext : {".txt", ".kv", ".det"}) outputs.add(fs::path(stem.string() + ext));
  }
  result.table = format_table(result.rows);
  write_text(cfg.work_dir / "report.txt", result.table);
  outputs.add(cfg.work_dir / "report.txt");
  outputs.write("evaluate");
  return result;
}

}  // namespace olr
