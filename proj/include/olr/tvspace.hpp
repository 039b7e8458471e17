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

// Total-variability model: supervector offset M = m + T w with w ~ N(0, I).
// Residual covariances are the UBM covariances.

#pragma once

#include <span>

#include "olr/common.hpp"
#include "olr/ubm.hpp"

namespace olr {

struct TVModel {
  RowMatrix t_matrix;  // (K*D) x R; component c owns rows [c*D, (c+1)*D)
  DiagGmm ubm;

  std::size_t rank() const { return static_cast<std::size_t>(t_matrix.cols()); }

  auto block(std::size_t c) const {
    const auto d = static_cast<Eigen::Index>(ubm.dim());
    return t_matrix.middleRows(static_cast<Eigen::Index>(c) * d, d);
  }
};

struct IVector {
  std::string segment_id;
  Vector w;
};

/// Gaussian posterior of w for one segment.
struct IVectorPosterior {
  Vector mean;        // R
  Matrix precision;   // R x R, I + sum_c n_c T_c' S_c^-1 T_c
  Vector linear;      // R, T' S^-1 f
  double log_det_precision = 0.0;

  Matrix covariance() const {
    return precision.llt().solve(Matrix::Identity(precision.rows(), precision.cols()));
  }

  /// Log marginal likelihood of the first-order stats up to a T-independent
  /// constant: 0.5 b' L^-1 b - 0.5 log|L|.
  double auxiliary() const { return 0.5 * linear.dot(mean) - 0.5 * log_det_precision; }
};

/// Per-component products that every posterior needs.
class TvEvaluator {
 public:
  explicit TvEvaluator(const TVModel& model) : model_(&model) {
    const std::size_t k = model.ubm.num_components();
    scaled_.resize(k);
    gram_.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
      const Matrix tc = model.block(c);
      const Vector inv_var = model.ubm.variances.row(static_cast<Eigen::Index>(c)).transpose().cwiseInverse();
      scaled_[c] = inv_var.asDiagonal() * tc;
      gram_[c] = tc.transpose() * scaled_[c];
      gram_[c] = 0.5 * (gram_[c] + gram_[c].transpose());
    }
  }

  IVectorPosterior posterior(const SufficientStats& stats) const {
    const std::size_t k = model_->ubm.num_components();
    if (stats.num_components() != k || stats.dim() != model_->ubm.dim())
      throw DataError(strprintf("stats shape %zux%zu does not match TV model UBM %zux%zu", stats.num_components(),
                                stats.dim(), k, model_->ubm.dim()));
    const auto r = static_cast<Eigen::Index>(model_->rank());
    IVectorPosterior post;
    post.precision = Matrix::Identity(r, r);
    post.linear = Vector::Zero(r);
    for (std::size_t c = 0; c < k; ++c) {
      const double n = stats.n(static_cast<Eigen::Index>(c));
      if (n != 0.0) post.precision.noalias() += n * gram_[c];
      post.linear.noalias() += scaled_[c].transpose() * stats.f.row(static_cast<Eigen::Index>(c)).transpose();
    }
    Eigen::LLT<Matrix> llt(post.precision);
    if (llt.info() != Eigen::Success) throw NumericError("i-vector posterior precision is not positive definite");
    post.mean = llt.solve(post.linear);
    post.log_det_precision = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return post;
  }

 private:
  const TVModel* model_;
  std::vector<Matrix> scaled_;  // S_c^-1 T_c, D x R
  std::vector<Matrix> gram_;    // T_c' S_c^-1 T_c, R x R
};

inline IVector extract_ivector(const TVModel& model, const SufficientStats& stats, std::string segment_id = {}) {
  return IVector{std::move(segment_id), TvEvaluator(model).posterior(stats).mean};
}

/// Batch extraction reusing one evaluator.
inline std::vector<Vector> extract_ivectors(const TVModel& model, std::span<const SufficientStats> stats) {
  const TvEvaluator eval(model);
  std::vector<Vector> out(stats.size());
  parallel_for(stats.size(), [&](std::size_t i) { out[i] = eval.posterior(stats[i]).mean; });
  return out;
}

struct TvConfig {
  std::size_t rank = 20;
  std::size_t n_iterations = 10;
  std::uint64_t rng_seed = 2;

  void validate(std::size_t supervector_dim) const {
    if (rank < 1) throw ConfigError("i-vector rank must be >= 1");
    if (rank > supervector_dim)
      throw ConfigError(strprintf("i-vector rank %zu exceeds supervector dimension %zu", rank, supervector_dim));
    if (n_iterations < 1) throw ConfigError("TV iterations must be >= 1");
  }
};

inline void to_json(Json& j, const TvConfig& c) {
  j = Json{{"rank", c.rank}, {"n_iterations", c.n_iterations}, {"rng_seed", c.rng_seed}};
}

inline void from_json(const Json& j, TvConfig& c) {
  c.rank = j.value("rank", c.rank);
  c.n_iterations = j.value("n_iterations", c.n_iterations);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
}

/// EM estimation of T. `aux_history`, when given, receives the summed
/// auxiliary objective of the model entering each iteration.
inline TVModel train_tv(std::span<const SufficientStats> stats, const DiagGmm& ubm, const TvConfig& cfg,
                        std::vector<double>* aux_history = nullptr) {
  const std::size_t k = ubm.num_components();
  const std::size_t d = ubm.dim();
  cfg.validate(k * d);
  if (stats.empty()) throw DataError("train_tv: no statistics");
  for (const auto& s : stats)
    if (s.num_components() != k || s.dim() != d) throw DataError("train_tv: stats do not conform to the UBM");
  const auto r = static_cast<Eigen::Index>(cfg.rank);
  const auto dd = static_cast<Eigen::Index>(d);

  TVModel model;
  model.ubm = ubm;
  model.t_matrix.resize(static_cast<Eigen::Index>(k * d), r);
  Rng rng(cfg.rng_seed);
  const double scale = 0.1 / std::sqrt(static_cast<double>(cfg.rank));
  for (std::size_t c = 0; c < k; ++c)
    for (Eigen::Index j = 0; j < dd; ++j) {
      const double sd = std::sqrt(ubm.variances(static_cast<Eigen::Index>(c), j));
      for (Eigen::Index q = 0; q < r; ++q)
        model.t_matrix(static_cast<Eigen::Index>(c) * dd + j, q) = scale * sd * rng.normal();
    }

  if (aux_history) aux_history->clear();
  std::vector<Vector> means(stats.size());
  std::vector<Matrix> second(stats.size());  // E[w w']
  for (std::size_t iter = 0; iter < cfg.n_iterations; ++iter) {
    // E-step, per segment.
    const TvEvaluator eval(model);
    std::vector<double> aux(stats.size());
    parallel_for(stats.size(), [&](std::size_t s) {
      const IVectorPosterior post = eval.posterior(stats[s]);
      aux[s] = post.auxiliary();
      means[s] = post.mean;
      second[s] = post.covariance();
      second[s].noalias() += post.mean * post.mean.transpose();
    });
    double total_aux = 0.0;
    for (double a : aux) total_aux += a;
    if (aux_history) aux_history->push_back(total_aux);
    log_debug(strprintf("tv iter %zu: auxiliary %.6f", iter, total_aux));

    // M-step, per component: T_c = (sum_s f_c w') (sum_s n_c E[ww'])^-1.
    parallel_for(k, [&](std::size_t c) {
      const auto ci = static_cast<Eigen::Index>(c);
      Matrix a = Matrix::Zero(r, r);
      Matrix cross = Matrix::Zero(dd, r);
      for (std::size_t s = 0; s < stats.size(); ++s) {
        const double n = stats[s].n(ci);
        if (n != 0.0) a.noalias() += n * second[s];
        cross.noalias() += stats[s].f.row(ci).transpose() * means[s].transpose();
      }
      Eigen::LLT<Matrix> llt(a);
      if (llt.info() != Eigen::Success) {
        const double jitter = 1e-8 * a.trace();
        log_info(strprintf("tv iter %zu: component %zu M-step system singular, adding ridge %.3g", iter, c, jitter));
        if (!(jitter > 0.0)) return;  // no occupancy: leave this block unchanged
        a.diagonal().array() += jitter;
        llt.compute(a);
        if (llt.info() != Eigen::Success) throw NumericError(strprintf("tv M-step failed for component %zu", c));
      }
      model.t_matrix.middleRows(ci * dd, dd) = llt.solve(cross.transpose()).transpose();
    });
  }
  if (!model.t_matrix.allFinite()) throw NumericError("train_tv produced non-finite T");
  return model;
}

inline TVModel train_tv(const std::vector<SufficientStats>& stats, const DiagGmm& ubm, const TvConfig& cfg,
                        std::vector<double>* aux_history = nullptr) {
  return train_tv(std::span<const SufficientStats>(stats), ubm, cfg, aux_history);
}

inline Json to_json(const TVModel& model) {
  Json j = make_envelope("TVModel");
  j["K"] = model.ubm.num_components();
  j["D"] = model.ubm.dim();
  j["R"] = model.rank();
  j["t_matrix"] = matrix_to_json(model.t_matrix);
  j["ubm"] = to_json(model.ubm);
  return j;
}

inline TVModel tv_model_from_json(const Json& j) {
  check_envelope(j, "TVModel");
  TVModel model;
  model.ubm = diag_gmm_from_json(j.at("ubm"));
  const auto k = j.at("K").get<Eigen::Index>();
  const auto d = j.at("D").get<Eigen::Index>();
  const auto r = j.at("R").get<Eigen::Index>();
  if (static_cast<std::size_t>(k) != model.ubm.num_components() || static_cast<std::size_t>(d) != model.ubm.dim())
    throw DataError("TVModel: K/D disagree with embedded UBM");
  model.t_matrix = matrix_from_json(j.at("t_matrix"), k * d, r);
  return model;
}

// i-vector dump: "segment_id v1 ... vR" per line.

inline void write_ivectors(const std::vector<IVector>& ivectors, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& iv : ivectors) {
    out << iv.segment_id;
    for (Eigen::Index i = 0; i < iv.w.size(); ++i) out << ' ' << strprintf("%.17g", iv.w(i));
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline std::vector<IVector> read_ivectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open i-vector file '" + path.string() + "'");
  std::vector<IVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty() || fields[0][0] == '#') continue;
    if (fields.size() < 2) throw DataError(strprintf("%s:%zu: empty i-vector", path.string().c_str(), line_no));
    if (!out.empty() && static_cast<std::size_t>(out.front().w.size()) != fields.size() - 1)
      throw DataError(strprintf("%s:%zu: inconsistent i-vector dimension", path.string().c_str(), line_no));
    IVector iv{fields[0], Vector(static_cast<Eigen::Index>(fields.size() - 1))};
    for (std::size_t i = 1; i < fields.size(); ++i) {
      try {
        std::size_t used = 0;
        iv.w(static_cast<Eigen::Index>(i - 1)) = std::stod(fields[i], &used);
        if (used != fields[i].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw DataError(strprintf("%s:%zu: malformed number '%s'", path.string().c_str(), line_no, fields[i].c_str()));
      }
    }
    out.push_back(std::move(iv));
  }
  return out;
}

}  // namespace olr
