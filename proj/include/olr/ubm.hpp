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

// Diagonal-covariance GMM (the universal background model), EM training and
// Baum-Welch statistics.

#pragma once

#include <span>

#include "olr/common.hpp"
#include "olr/features.hpp"

namespace olr {

struct DiagGmm {
  Vector weights;        // K
  RowMatrix means;       // K x D
  RowMatrix variances;   // K x D
  Vector variance_floor; // D

  std::size_t num_components() const { return static_cast<std::size_t>(weights.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }

  void check() const {
    const auto k = weights.size();
    if (k < 1 || means.rows() != k || variances.rows() != k || variances.cols() != means.cols() ||
        variance_floor.size() != means.cols())
      throw DataError("DiagGmm: inconsistent parameter shapes");
    if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-8)
      throw DataError("DiagGmm: weights are not on the simplex");
    if (!(variances.array() > 0.0).all()) throw DataError("DiagGmm: non-positive variance");
    if (!means.allFinite() || !variances.allFinite()) throw DataError("DiagGmm: non-finite parameters");
  }
};

/// Per-component constants for fast density evaluation.
struct GmmEvaluator {
  explicit GmmEvaluator(const DiagGmm& gmm) : model(&gmm) {
    const auto k = gmm.weights.size();
    const auto d = gmm.means.cols();
    inv_var = gmm.variances.cwiseInverse();
    log_const.resize(k);
    for (Eigen::Index c = 0; c < k; ++c) {
      double s = static_cast<double>(d) * std::log(2.0 * M_PI);
      for (Eigen::Index j = 0; j < d; ++j) s += std::log(gmm.variances(c, j));
      log_const(c) = std::log(gmm.weights(c)) - 0.5 * s;
    }
  }

  /// out(c) = log w_c + log N(x; m_c, diag var_c).
  void component_log_densities(const double* x, Vector& out) const {
    const auto k = model->weights.size();
    const auto d = model->means.cols();
    out.resize(k);
    for (Eigen::Index c = 0; c < k; ++c) {
      const double* m = model->means.data() + c * d;
      const double* iv = inv_var.data() + c * d;
      double q = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = x[j] - m[j];
        q += diff * diff * iv[j];
      }
      out(c) = log_const(c) - 0.5 * q;
    }
  }

  /// Turns log densities into posteriors in place and returns the frame
  /// log-likelihood.
  static double normalize(Vector& log_dens) {
    const double total = log_sum_exp(log_dens);
    log_dens = (log_dens.array() - total).exp();
    return total;
  }

  const DiagGmm* model;
  RowMatrix inv_var;
  Vector log_const;
};

inline double gmm_log_likelihood(const DiagGmm& model, const Eigen::Ref<const Vector>& frame) {
  if (static_cast<std::size_t>(frame.size()) != model.dim())
    throw DataError(strprintf("frame dimension %lld does not match model dimension %zu",
                              static_cast<long long>(frame.size()), model.dim()));
  GmmEvaluator eval(model);
  Vector dens;
  const Vector x = frame;
  eval.component_log_densities(x.data(), dens);
  return log_sum_exp(dens);
}

/// Zeroth- and centered first-order Baum-Welch statistics:
/// n(c) = sum_t gamma_c(t), f(c, :) = sum_t gamma_c(t) (x_t - m_c).
struct SufficientStats {
  Vector n;           // K
  RowMatrix f;        // K x D
  double total_frames = 0.0;

  static SufficientStats zeros(std::size_t k, std::size_t d) {
    SufficientStats s;
    s.n = Vector::Zero(static_cast<Eigen::Index>(k));
    s.f = RowMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
    return s;
  }

  SufficientStats& operator+=(const SufficientStats& other) {
    if (other.n.size() != n.size() || other.f.cols() != f.cols()) throw DataError("cannot merge stats of different shape");
    n += other.n;
    f += other.f;
    total_frames += other.total_frames;
    return *this;
  }

  std::size_t num_components() const { return static_cast<std::size_t>(n.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(f.cols()); }
};

inline SufficientStats accumulate_stats(const DiagGmm& model, const FeatureMatrix& features) {
  if (static_cast<std::size_t>(features.cols()) != model.dim())
    throw DataError(strprintf("feature dimension %lld does not match UBM dimension %zu",
                              static_cast<long long>(features.cols()), model.dim()));
  const auto k = model.weights.size();
  const auto d = model.means.cols();
  GmmEvaluator eval(model);
  SufficientStats stats = SufficientStats::zeros(static_cast<std::size_t>(k), static_cast<std::size_t>(d));
  Vector post;
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    const double* x = features.data() + t * d;
    eval.component_log_densities(x, post);
    GmmEvaluator::normalize(post);
    for (Eigen::Index c = 0; c < k; ++c) {
      const double g = post(c);
      stats.n(c) += g;
      double* f = stats.f.data() + c * d;
      const double* m = model.means.data() + c * d;
      for (Eigen::Index j = 0; j < d; ++j) f[j] += g * (x[j] - m[j]);
    }
  }
  stats.total_frames = static_cast<double>(features.rows());
  return stats;
}

struct EmConfig {
  std::size_t n_components = 64;
  std::size_t n_iterations = 20;
  /// Variance floor as a fraction of the global per-dimension variance.
  double variance_floor_factor = 1e-4;
  std::size_t init_subsample = 100000;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (n_components < 1) throw ConfigError("n_components must be >= 1");
    if (n_iterations < 1) throw ConfigError("n_iterations must be >= 1");
    if (!(variance_floor_factor > 0.0)) throw ConfigError("variance_floor_factor must be > 0");
    if (init_subsample < 1) throw ConfigError("init_subsample must be >= 1");
  }
};

inline void to_json(Json& j, const EmConfig& c) {
  j = Json{{"n_components", c.n_components},
           {"n_iterations", c.n_iterations},
           {"variance_floor_factor", c.variance_floor_factor},
           {"init_subsample", c.init_subsample},
           {"rng_seed", c.rng_seed}};
}

inline void from_json(const Json& j, EmConfig& c) {
  c.n_components = j.value("n_components", c.n_components);
  c.n_iterations = j.value("n_iterations", c.n_iterations);
  c.variance_floor_factor = j.value("variance_floor_factor", c.variance_floor_factor);
  c.init_subsample = j.value("init_subsample", c.init_subsample);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
}

namespace detail {

inline constexpr std::size_t kSegmentsPerBlock = 8;

struct FrameRef {
  std::size_t segment;
  Eigen::Index row;
};

/// Every stride-th frame across all segments, capped at `cap`.
inline std::vector<FrameRef> subsample_frames(std::span<const FeatureMatrix> features, std::size_t total, std::size_t cap) {
  const std::size_t stride = std::max<std::size_t>(1, (total + cap - 1) / cap);
  std::vector<FrameRef> out;
  std::size_t global = 0;
  for (std::size_t s = 0; s < features.size(); ++s)
    for (Eigen::Index t = 0; t < features[s].rows(); ++t, ++global)
      if (global % stride == 0) out.push_back({s, t});
  return out;
}

/// k-means++ seeding under a variance-normalized distance.
inline RowMatrix kmeanspp_seed(std::span<const FeatureMatrix> features, const std::vector<FrameRef>& pool,
                               const Vector& inv_scale, std::size_t k, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(inv_scale.size());
  auto frame = [&](std::size_t i) { return features[pool[i].segment].row(pool[i].row); };
  RowMatrix centers(static_cast<Eigen::Index>(k), d);
  std::vector<double> dist(pool.size(), kInf);
  std::size_t pick = rng.index(pool.size());
  for (std::size_t c = 0; c < k; ++c) {
    centers.row(static_cast<Eigen::Index>(c)) = frame(pick);
    double total = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const double dd = ((frame(i) - centers.row(static_cast<Eigen::Index>(c))).array().square() *
                         inv_scale.transpose().array())
                            .sum();
      dist[i] = std::min(dist[i], dd);
      total += dist[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = rng.index(pool.size());
      continue;
    }
    double target = rng.uniform() * total;
    pick = pool.size() - 1;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      target -= dist[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centers;
}

struct EmAccumulator {
  double loglik = 0.0;
  Vector occ;
  RowMatrix first;   // sum gamma (x - m_old)
  RowMatrix second;  // sum gamma (x - m_old)^2
};

}  // namespace detail

/// EM for a diagonal GMM on the pooled frames. `loglik_history`, when given,
/// receives the total log-likelihood of the model entering each iteration.
inline DiagGmm train_ubm(std::span<const FeatureMatrix> features, const EmConfig& cfg,
                         std::vector<double>* loglik_history = nullptr) {
  cfg.validate();
  if (features.empty()) throw DataError("train_ubm: no feature matrices");
  const Eigen::Index d = features[0].cols();
  std::size_t total = 0;
  for (const auto& f : features) {
    if (f.cols() != d) throw DataError("train_ubm: inconsistent feature dimensions");
    if (!f.allFinite()) throw DataError("train_ubm: non-finite feature value");
    total += static_cast<std::size_t>(f.rows());
  }
  const auto k = static_cast<Eigen::Index>(cfg.n_components);
  if (total < cfg.n_components)
    throw DataError(strprintf("train_ubm: %zu frames is fewer than %zu components", total, cfg.n_components));

  // Global moments (two-pass).
  Vector mean = Vector::Zero(d);
  for (const auto& f : features) mean += f.colwise().sum().transpose();
  mean /= static_cast<double>(total);
  Vector var = Vector::Zero(d);
  for (const auto& f : features) var += (f.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
  var /= static_cast<double>(total);
  const Vector floor = (cfg.variance_floor_factor * var).cwiseMax(1e-300);
  const Vector var_floored = var.cwiseMax(floor);

  DiagGmm gmm;
  gmm.variance_floor = floor;
  gmm.weights = Vector::Constant(k, 1.0 / static_cast<double>(k));
  gmm.variances = var_floored.transpose().replicate(k, 1);
  if (k == 1) {
    gmm.means = mean.transpose();
  } else {
    Rng rng(cfg.rng_seed);
    const auto pool = detail::subsample_frames(features, total, cfg.init_subsample);
    gmm.means = detail::kmeanspp_seed(features, pool, var_floored.cwiseInverse(), cfg.n_components, rng);
  }

  if (loglik_history) loglik_history->clear();
  for (std::size_t iter = 0; iter < cfg.n_iterations; ++iter) {
    const GmmEvaluator eval(gmm);
    auto acc = block_reduce<detail::EmAccumulator>(
        features.size(), detail::kSegmentsPerBlock,
        [&] {
          return detail::EmAccumulator{0.0, Vector::Zero(k), RowMatrix::Zero(k, d), RowMatrix::Zero(k, d)};
        },
        [&](detail::EmAccumulator& a, std::size_t s) {
          Vector post;
          const auto& feats = features[s];
          for (Eigen::Index t = 0; t < feats.rows(); ++t) {
            const double* x = feats.data() + t * d;
            eval.component_log_densities(x, post);
            a.loglik += GmmEvaluator::normalize(post);
            for (Eigen::Index c = 0; c < k; ++c) {
              const double g = post(c);
              if (g == 0.0) continue;
              a.occ(c) += g;
              const double* m = gmm.means.data() + c * d;
              double* f1 = a.first.data() + c * d;
              double* f2 = a.second.data() + c * d;
              for (Eigen::Index j = 0; j < d; ++j) {
                const double diff = x[j] - m[j];
                f1[j] += g * diff;
                f2[j] += g * diff * diff;
              }
            }
          }
        },
        [](detail::EmAccumulator& into, const detail::EmAccumulator& from) {
          into.loglik += from.loglik;
          into.occ += from.occ;
          into.first += from.first;
          into.second += from.second;
        });
    if (loglik_history) loglik_history->push_back(acc.loglik);
    log_debug(strprintf("ubm iter %zu: avg loglik %.6f", iter, acc.loglik / static_cast<double>(total)));

    // M-step.
    const double min_occ = 1e-3;
    std::vector<Eigen::Index> empty;
    for (Eigen::Index c = 0; c < k; ++c) {
      const double n = acc.occ(c);
      if (n < min_occ) {
        empty.push_back(c);
        continue;
      }
      const auto shift = (acc.first.row(c) / n).eval();
      gmm.weights(c) = n / static_cast<double>(total);
      gmm.variances.row(c) =
          (acc.second.row(c) / n - shift.array().square().matrix()).cwiseMax(floor.transpose());
      gmm.means.row(c) += shift;
    }
    for (Eigen::Index c : empty) {
      Eigen::Index donor = 0;
      gmm.weights.maxCoeff(&donor);
      log_info(strprintf("ubm iter %zu: component %lld empty, splitting component %lld", iter,
                         static_cast<long long>(c), static_cast<long long>(donor)));
      const auto sd = gmm.variances.row(donor).cwiseSqrt().eval();
      gmm.means.row(c) = gmm.means.row(donor) + 0.2 * sd;
      gmm.means.row(donor) -= 0.2 * sd;
      gmm.variances.row(c) = gmm.variances.row(donor);
      gmm.weights(donor) *= 0.5;
      gmm.weights(c) = gmm.weights(donor);
    }
    gmm.weights /= gmm.weights.sum();
  }
  return gmm;
}

inline DiagGmm train_ubm(const std::vector<FeatureMatrix>& features, const EmConfig& cfg,
                         std::vector<double>* loglik_history = nullptr) {
  return train_ubm(std::span<const FeatureMatrix>(features), cfg, loglik_history);
}

inline Json to_json(const DiagGmm& gmm) {
  Json j = make_envelope("DiagGmm");
  j["K"] = gmm.num_components();
  j["D"] = gmm.dim();
  j["weights"] = vector_to_json(gmm.weights);
  j["means"] = matrix_to_json(gmm.means);
  j["variances"] = matrix_to_json(gmm.variances);
  j["floor"] = vector_to_json(gmm.variance_floor);
  return j;
}

inline DiagGmm diag_gmm_from_json(const Json& j) {
  check_envelope(j, "DiagGmm");
  const auto k = j.at("K").get<Eigen::Index>();
  const auto d = j.at("D").get<Eigen::Index>();
  DiagGmm gmm;
  gmm.weights = vector_from_json(j.at("weights"), k);
  gmm.means = matrix_from_json(j.at("means"), k, d);
  gmm.variances = matrix_from_json(j.at("variances"), k, d);
  gmm.variance_floor = vector_from_json(j.at("floor"), d);
  gmm.check();
  return gmm;
}

}  // namespace olr
