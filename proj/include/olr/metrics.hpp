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

// Detection and identification metrics over per-segment score vectors:
// Cavg (hard decisions at l >= 0), pooled EER / minDCF / DET, and IDR.

#pragma once

#include <span>

#include <boost/math/distributions/normal.hpp>

#include "olr/common.hpp"
#include "olr/corpus.hpp"

namespace olr {

/// Segment x language score table. Column i of every score vector belongs to
/// languages[i]; -inf marks a lost trial.
struct TrialScores {
  std::vector<LanguageCode> languages;
  std::vector<std::string> segment_ids;
  std::vector<Vector> scores;
  std::vector<std::size_t> truth;  // column index of the true language
  std::vector<bool> lost;

  std::size_t num_languages() const { return languages.size(); }
  std::size_t size() const { return scores.size(); }

  void add(std::string id, Vector s, std::size_t truth_column, bool is_lost = false) {
    segment_ids.push_back(std::move(id));
    scores.push_back(std::move(s));
    truth.push_back(truth_column);
    lost.push_back(is_lost);
  }

  void check() const {
    const std::size_t n = size();
    if (segment_ids.size() != n || truth.size() != n || lost.size() != n) throw DataError("TrialScores: ragged table");
    for (std::size_t s = 0; s < n; ++s) {
      if (static_cast<std::size_t>(scores[s].size()) != languages.size())
        throw DataError("TrialScores: segment '" + segment_ids[s] + "' has the wrong number of scores");
      if (truth[s] >= languages.size()) throw DataError("TrialScores: segment '" + segment_ids[s] + "' has no truth label");
      for (Eigen::Index i = 0; i < scores[s].size(); ++i)
        if (std::isnan(scores[s](i)) || scores[s](i) == kInf)
          throw DataError("TrialScores: segment '" + segment_ids[s] + "' has a NaN or +inf score");
    }
  }
};

struct MetricConfig {
  double p_target = 0.5;

  void validate() const {
    if (!(p_target > 0.0 && p_target < 1.0)) throw ConfigError("p_target must be in (0, 1)");
  }
};

struct CavgResult {
  double cavg = 0.0;
  Vector p_miss;  // per target language
  Matrix p_fa;    // (target, non-target); diagonal unused (zero)
};

inline CavgResult compute_cavg(const TrialScores& trials, const MetricConfig& cfg = {}) {
  cfg.validate();
  trials.check();
  const std::size_t n = trials.num_languages();
  if (n < 2) throw DataError("Cavg needs at least two languages");
  std::vector<std::size_t> count(n, 0);
  for (std::size_t t : trials.truth) ++count[t];
  for (std::size_t l = 0; l < n; ++l)
    if (count[l] == 0) throw DataError("no test segments for language '" + std::string(trials.languages[l].str()) + "'");

  const auto ni = static_cast<Eigen::Index>(n);
  Matrix accepted = Matrix::Zero(ni, ni);  // (hypothesis, truth) counts of l >= 0
  for (std::size_t s = 0; s < trials.size(); ++s)
    for (Eigen::Index h = 0; h < ni; ++h)
      if (trials.scores[s](h) >= 0.0) accepted(h, static_cast<Eigen::Index>(trials.truth[s])) += 1.0;

  CavgResult r;
  r.p_miss.resize(ni);
  r.p_fa = Matrix::Zero(ni, ni);
  double total = 0.0;
  for (Eigen::Index t = 0; t < ni; ++t) {
    const auto n_t = static_cast<double>(count[static_cast<std::size_t>(t)]);
    r.p_miss(t) = (n_t - accepted(t, t)) / n_t;
    double fa_sum = 0.0;
    for (Eigen::Index nt = 0; nt < ni; ++nt) {
      if (nt == t) continue;
      r.p_fa(t, nt) = accepted(t, nt) / static_cast<double>(count[static_cast<std::size_t>(nt)]);
      fa_sum += r.p_fa(t, nt);
    }
    total += cfg.p_target * r.p_miss(t) + (1.0 - cfg.p_target) * fa_sum / static_cast<double>(n - 1);
  }
  r.cavg = total / static_cast<double>(n);
  return r;
}

struct DetectionTrial {
  double score;
  bool target;
};

/// Every segment contributes one trial per language.
inline std::vector<DetectionTrial> pool_detection_trials(const TrialScores& trials) {
  std::vector<DetectionTrial> out;
  out.reserve(trials.size() * trials.num_languages());
  for (std::size_t s = 0; s < trials.size(); ++s)
    for (std::size_t l = 0; l < trials.num_languages(); ++l)
      out.push_back({trials.scores[s](static_cast<Eigen::Index>(l)), l == trials.truth[s]});
  return out;
}

/// Accept when score >= threshold. -inf scores are never accepted.
struct OperatingPoint {
  double threshold;
  double p_miss;
  double p_fa;
};

/// One operating point per distinct finite score plus +inf, in ascending
/// threshold order (p_miss non-decreasing, p_fa non-increasing).
inline std::vector<OperatingPoint> operating_points(std::span<const DetectionTrial> pooled) {
  std::size_t n_tar = 0, n_non = 0;
  std::vector<DetectionTrial> sorted;
  sorted.reserve(pooled.size());
  for (const auto& t : pooled) {
    if (std::isnan(t.score) || t.score == kInf) throw DataError("detection scores must be finite or -inf");
    (t.target ? n_tar : n_non) += 1;
    if (t.score != -kInf) sorted.push_back(t);
  }
  if (n_tar == 0 || n_non == 0) throw DataError("detection metrics need at least one target and one non-target trial");
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score < b.score; });

  std::size_t lost_tar = n_tar, lost_non = n_non;  // trials below the current threshold
  for (const auto& t : sorted) (t.target ? lost_tar : lost_non) -= 1;
  // Now lost_* count the -inf trials. Walk thresholds upwards.
  std::size_t miss = lost_tar;
  std::size_t fa = n_non - lost_non;
  std::vector<OperatingPoint> points;
  const auto nt = static_cast<double>(n_tar), nn = static_cast<double>(n_non);
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double theta = sorted[i].score;
    points.push_back({theta, static_cast<double>(miss) / nt, static_cast<double>(fa) / nn});
    while (i < sorted.size() && sorted[i].score == theta) {
      if (sorted[i].target) {
        ++miss;
      } else {
        --fa;
      }
      ++i;
    }
  }
  points.push_back({kInf, static_cast<double>(miss) / nt, static_cast<double>(fa) / nn});
  return points;
}

/// Crossing of p_miss and p_fa, linearly interpolated between adjacent
/// operating points. If the first operating point already has
/// p_miss >= p_fa (only possible with -inf target scores), the mean of its two
/// rates is returned.
inline double compute_eer(std::span<const DetectionTrial> pooled) {
  const auto pts = operating_points(pooled);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].p_miss < pts[i].p_fa) continue;
    if (i == 0) return 0.5 * (pts[0].p_miss + pts[0].p_fa);
    const double a = pts[i - 1].p_fa - pts[i - 1].p_miss;
    const double b = pts[i].p_miss - pts[i].p_fa;
    const double t = a / (a + b);
    return pts[i - 1].p_miss + t * (pts[i].p_miss - pts[i - 1].p_miss);
  }
  return pts.back().p_miss;  // unreachable: the +inf point has p_miss = 1, p_fa = 0
}

inline double detection_cost(const OperatingPoint& p, const MetricConfig& cfg) {
  return cfg.p_target * p.p_miss + (1.0 - cfg.p_target) * p.p_fa;
}

/// Minimum unit-cost DCF over all thresholds, with the minimizing point.
inline std::pair<double, OperatingPoint> min_dcf_point(std::span<const DetectionTrial> pooled, const MetricConfig& cfg = {}) {
  cfg.validate();
  const auto pts = operating_points(pooled);
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (detection_cost(pts[i], cfg) < detection_cost(pts[best], cfg)) best = i;
  return {detection_cost(pts[best], cfg), pts[best]};
}

inline double compute_min_dcf(std::span<const DetectionTrial> pooled, const MetricConfig& cfg = {}) {
  return min_dcf_point(pooled, cfg).first;
}

struct DetCurve {
  std::vector<OperatingPoint> points;  // p_fa ascending, p_miss non-increasing
  OperatingPoint min_dcf_point{};
};

inline DetCurve det_points(std::span<const DetectionTrial> pooled, const MetricConfig& cfg = {}) {
  DetCurve det;
  det.points = operating_points(pooled);
  std::reverse(det.points.begin(), det.points.end());
  det.min_dcf_point = min_dcf_point(pooled, cfg).second;
  return det;
}

struct IdentificationResult {
  double idr = 0.0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
};

/// Argmax with ties to the lowest column (an all -inf vector picks column 0).
inline std::size_t argmax_column(const Vector& scores) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores(i) > scores(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  return best;
}

inline IdentificationResult compute_idr(const TrialScores& trials) {
  trials.check();
  if (trials.size() == 0) throw DataError("IDR needs at least one segment");
  IdentificationResult r;
  for (std::size_t s = 0; s < trials.size(); ++s) {
    if (argmax_column(trials.scores[s]) == trials.truth[s]) {
      ++r.correct;
    } else {
      ++r.incorrect;
    }
  }
  r.idr = static_cast<double>(r.correct) / static_cast<double>(r.correct + r.incorrect);
  return r;
}

struct MetricReport {
  std::vector<LanguageCode> languages;
  double cavg = 0.0;
  double eer = 0.0;
  double min_dcf = 0.0;
  double idr = 0.0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t segments = 0;
  std::size_t lost = 0;
  Vector p_miss;
  Matrix p_fa;
  DetCurve det;
};

inline MetricReport compute_report(const TrialScores& trials, const MetricConfig& cfg = {}) {
  MetricReport r;
  r.languages = trials.languages;
  const CavgResult cavg = compute_cavg(trials, cfg);
  r.cavg = cavg.cavg;
  r.p_miss = cavg.p_miss;
  r.p_fa = cavg.p_fa;
  const auto pooled = pool_detection_trials(trials);
  r.eer = compute_eer(pooled);
  r.det = det_points(pooled, cfg);
  r.min_dcf = detection_cost(r.det.min_dcf_point, cfg);
  const auto id = compute_idr(trials);
  r.idr = id.idr;
  r.correct = id.correct;
  r.incorrect = id.incorrect;
  r.segments = trials.size();
  for (std::size_t s = 0; s < trials.size(); ++s)
    if (trials.lost[s]) ++r.lost;
  return r;
}

// ---------------------------------------------------------------------------
// Report output

/// One row of the results table: Cavg*100, EER%, minDCF, IDR%.
inline std::string format_table_row(const std::string& system, const MetricReport& r) {
  return strprintf("%-26s %9.2f %8.2f %9.4f %8.2f", system.c_str(), 100.0 * r.cavg, 100.0 * r.eer, r.min_dcf,
                   100.0 * r.idr);
}

inline std::string format_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::string out = strprintf("%-26s %9s %8s %9s %8s\n", "System", "Cavg*100", "EER%", "minDCF", "IDR%");
  out += std::string(64, '-') + '\n';
  for (const auto& [name, report] : rows) out += format_table_row(name, report) + '\n';
  return out;
}

inline std::string format_key_values(const MetricReport& r) {
  std::string out;
  out += strprintf("cavg=%.10g\n", r.cavg);
  out += strprintf("eer=%.10g\n", r.eer);
  out += strprintf("min_dcf=%.10g\n", r.min_dcf);
  out += strprintf("idr=%.10g\n", r.idr);
  out += strprintf("correct=%zu\nincorrect=%zu\nsegments=%zu\nlost=%zu\n", r.correct, r.incorrect, r.segments, r.lost);
  out += strprintf("min_dcf_p_fa=%.10g\nmin_dcf_p_miss=%.10g\n", r.det.min_dcf_point.p_fa, r.det.min_dcf_point.p_miss);
  for (std::size_t t = 0; t < r.languages.size(); ++t) {
    const std::string lt(r.languages[t].str());
    out += strprintf("p_miss.%s=%.10g\n", lt.c_str(), r.p_miss(static_cast<Eigen::Index>(t)));
    for (std::size_t n = 0; n < r.languages.size(); ++n) {
      if (n == t) continue;
      out += strprintf("p_fa.%s.%s=%.10g\n", lt.c_str(), std::string(r.languages[n].str()).c_str(),
                       r.p_fa(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n)));
    }
  }
  return out;
}

/// Standard normal quantile, with probabilities clamped away from 0 and 1.
inline double probit(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, std::clamp(p, 1e-9, 1.0 - 1e-9));
}

/// Plot-ready DET data: normal-deviate coordinates first, then the raw rates.
inline std::string format_det(const DetCurve& det) {
  std::string out = "# probit_p_fa probit_p_miss p_fa p_miss threshold\n";
  out += strprintf("# min_dcf_point %.10g %.10g %.10g %.10g %.10g\n", probit(det.min_dcf_point.p_fa),
                   probit(det.min_dcf_point.p_miss), det.min_dcf_point.p_fa, det.min_dcf_point.p_miss,
                   det.min_dcf_point.threshold);
  for (const auto& p : det.points)
    out += strprintf("%.10g %.10g %.10g %.10g %.10g\n", probit(p.p_fa), probit(p.p_miss), p.p_fa, p.p_miss, p.threshold);
  return out;
}

}  // namespace olr
