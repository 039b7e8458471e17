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

// Language back-ends over i-vectors: Fisher LDA, cosine scoring against
// language means, one-vs-rest kernel SVMs trained with SMO, and softmax
// log-odds calibration.
//
// Classes are dense indices 0..N-1 (score-vector columns).

#pragma once

#include <map>
#include <span>

#include "olr/common.hpp"

namespace olr {

inline Vector length_normalize(const Vector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericError("cannot length-normalize a zero or non-finite vector");
  return v / norm;
}

namespace detail {

inline std::size_t count_classes(std::span<const std::size_t> labels) {
  std::size_t n = 0;
  for (std::size_t l : labels) n = std::max(n, l + 1);
  return n;
}

inline void check_labelled(std::span<const Vector> vectors, std::span<const std::size_t> labels) {
  if (vectors.size() != labels.size()) throw DataError("vector and label counts differ");
  if (vectors.empty()) throw DataError("no training vectors");
  for (const auto& v : vectors)
    if (v.size() != vectors[0].size()) throw DataError("training vectors have inconsistent dimensions");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// LDA

struct LdaTransform {
  Matrix projection;  // R x P
  Vector input_mean;  // R
  Vector eigenvalues; // P, descending

  std::size_t input_dim() const { return static_cast<std::size_t>(projection.rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(projection.cols()); }
};

/// Within-class (S_w) and between-class (S_b) covariance, both normalized by
/// the total sample count.
struct ScatterMatrices {
  Matrix within;
  Matrix between;
  Vector mean;
};

inline ScatterMatrices scatter_matrices(std::span<const Vector> vectors, std::span<const std::size_t> labels) {
  detail::check_labelled(vectors, labels);
  const std::size_t n_classes = detail::count_classes(labels);
  const auto dim = vectors[0].size();
  std::vector<Vector> class_sum(n_classes, Vector::Zero(dim));
  std::vector<std::size_t> count(n_classes, 0);
  ScatterMatrices s;
  s.mean = Vector::Zero(dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    class_sum[labels[i]] += vectors[i];
    ++count[labels[i]];
    s.mean += vectors[i];
  }
  const auto total = static_cast<double>(vectors.size());
  s.mean /= total;
  s.within = Matrix::Zero(dim, dim);
  s.between = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const Vector diff = vectors[i] - class_sum[labels[i]] / static_cast<double>(count[labels[i]]);
    s.within.noalias() += diff * diff.transpose();
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (count[c] == 0) continue;
    const Vector diff = class_sum[c] / static_cast<double>(count[c]) - s.mean;
    s.between.noalias() += static_cast<double>(count[c]) * diff * diff.transpose();
  }
  s.within /= total;
  s.between /= total;
  return s;
}

inline LdaTransform fit_lda(std::span<const Vector> vectors, std::span<const std::size_t> labels, std::size_t p) {
  detail::check_labelled(vectors, labels);
  const std::size_t n_classes = detail::count_classes(labels);
  std::vector<std::size_t> count(n_classes, 0);
  for (std::size_t l : labels) ++count[l];
  std::size_t present = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (count[c] == 0) continue;
    ++present;
    if (count[c] < 2) throw DataError(strprintf("LDA: class %zu has %zu sample(s), need >= 2", c, count[c]));
  }
  if (present < 2) throw DataError("LDA needs at least two classes");
  const auto dim = static_cast<std::size_t>(vectors[0].size());
  if (p < 1 || p > present - 1 || p > dim)
    throw ConfigError(strprintf("LDA output dimension %zu out of range [1, %zu]", p, std::min(present - 1, dim)));

  ScatterMatrices s = scatter_matrices(vectors, labels);
  const double ridge = 1e-6 * s.within.trace() / static_cast<double>(dim);
  s.within.diagonal().array() += ridge > 0.0 ? ridge : 1e-12;

  // S_b v = lambda S_w v, eigenvectors normalized to v' S_w v = 1.
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(s.between, s.within);
  if (solver.info() != Eigen::Success) throw NumericError("LDA generalized eigensolver failed");
  LdaTransform lda;
  lda.input_mean = s.mean;
  lda.projection.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(p));
  lda.eigenvalues.resize(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    const auto src = static_cast<Eigen::Index>(dim - 1 - i);
    Vector col = solver.eigenvectors().col(src);
    Eigen::Index pivot = 0;
    col.cwiseAbs().maxCoeff(&pivot);
    if (col(pivot) < 0.0) col = -col;
    lda.projection.col(static_cast<Eigen::Index>(i)) = col;
    lda.eigenvalues(static_cast<Eigen::Index>(i)) = solver.eigenvalues()(src);
  }
  return lda;
}

inline Vector project(const LdaTransform& lda, const Vector& v) {
  if (v.size() != lda.projection.rows())
    throw DataError(strprintf("cannot project a %lld-dim vector with a %lld-input LDA", static_cast<long long>(v.size()),
                              static_cast<long long>(lda.projection.rows())));
  return lda.projection.transpose() * (v - lda.input_mean);
}

inline Json to_json(const LdaTransform& lda) {
  Json j = make_envelope("LdaTransform");
  j["R"] = lda.input_dim();
  j["P"] = lda.output_dim();
  j["projection"] = matrix_to_json(lda.projection);
  j["input_mean"] = vector_to_json(lda.input_mean);
  j["eigenvalues"] = vector_to_json(lda.eigenvalues);
  return j;
}

inline LdaTransform lda_from_json(const Json& j) {
  check_envelope(j, "LdaTransform");
  const auto r = j.at("R").get<Eigen::Index>();
  const auto p = j.at("P").get<Eigen::Index>();
  LdaTransform lda;
  lda.projection = matrix_from_json(j.at("projection"), r, p);
  lda.input_mean = vector_from_json(j.at("input_mean"), r);
  lda.eigenvalues = vector_from_json(j.at("eigenvalues"), p);
  return lda;
}

// ---------------------------------------------------------------------------
// Cosine scoring

struct LanguageMeans {
  Matrix means;  // N x dim, unit-norm rows

  std::size_t num_classes() const { return static_cast<std::size_t>(means.rows()); }
};

inline LanguageMeans compute_language_means(std::span<const Vector> vectors, std::span<const std::size_t> labels,
                                            std::size_t n_classes) {
  detail::check_labelled(vectors, labels);
  const auto dim = vectors[0].size();
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(n_classes), dim);
  std::vector<std::size_t> count(n_classes, 0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (labels[i] >= n_classes) throw DataError(strprintf("label %zu out of range", labels[i]));
    sum.row(static_cast<Eigen::Index>(labels[i])) += vectors[i].transpose();
    ++count[labels[i]];
  }
  LanguageMeans out;
  out.means.resize(static_cast<Eigen::Index>(n_classes), dim);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (count[c] == 0) throw DataError(strprintf("no training vectors for class %zu", c));
    const Vector mean = sum.row(static_cast<Eigen::Index>(c)).transpose() / static_cast<double>(count[c]);
    const double norm = mean.norm();
    if (!(norm > 0.0)) throw NumericError(strprintf("mean of class %zu is the zero vector", c));
    out.means.row(static_cast<Eigen::Index>(c)) = (mean / norm).transpose();
  }
  return out;
}

inline Vector cosine_scores(const LanguageMeans& means, const Vector& v) {
  if (v.size() != means.means.cols()) throw DataError("cosine_scores: dimension mismatch");
  const double norm = v.norm();
  if (!(norm > 0.0)) throw NumericError("cosine_scores: zero test vector");
  return means.means * v / norm;
}

inline Json to_json(const LanguageMeans& m) {
  Json j = make_envelope("LanguageMeans");
  j["N"] = m.num_classes();
  j["dim"] = m.means.cols();
  j["means"] = matrix_to_json(m.means);
  return j;
}

inline LanguageMeans language_means_from_json(const Json& j) {
  check_envelope(j, "LanguageMeans");
  LanguageMeans m;
  m.means = matrix_from_json(j.at("means"), j.at("N").get<Eigen::Index>(), j.at("dim").get<Eigen::Index>());
  return m;
}

// ---------------------------------------------------------------------------
// Kernel SVM

enum class KernelType { kLinear, kPoly, kRbf };

struct KernelSpec {
  KernelType type = KernelType::kLinear;
  double gamma = 0.0;  // <= 0 means "use the data-dependent default"
  double coef0 = 1.0;
  int degree = 3;

  double operator()(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const {
    switch (type) {
      case KernelType::kLinear:
        return a.dot(b);
      case KernelType::kPoly:
        return std::pow(gamma * a.dot(b) + coef0, degree);
      case KernelType::kRbf:
        return std::exp(-gamma * (a - b).squaredNorm());
    }
    return 0.0;
  }

  std::string name() const {
    switch (type) {
      case KernelType::kLinear:
        return "linear";
      case KernelType::kPoly:
        return "poly";
      case KernelType::kRbf:
        return "rbf";
    }
    return "?";
  }

  static KernelSpec parse(std::string_view name) {
    KernelSpec k;
    if (name == "linear") {
      k.type = KernelType::kLinear;
    } else if (name == "poly") {
      k.type = KernelType::kPoly;
    } else if (name == "rbf") {
      k.type = KernelType::kRbf;
    } else {
      throw ConfigError("unknown kernel '" + std::string(name) + "' (expected linear, poly or rbf)");
    }
    return k;
  }
};

inline Json to_json(const KernelSpec& k) {
  return Json{{"name", k.name()}, {"gamma", k.gamma}, {"coef0", k.coef0}, {"degree", k.degree}};
}

inline KernelSpec kernel_from_json(const Json& j) {
  KernelSpec k = KernelSpec::parse(j.at("name").get<std::string>());
  k.gamma = j.value("gamma", k.gamma);
  k.coef0 = j.value("coef0", k.coef0);
  k.degree = j.value("degree", k.degree);
  return k;
}

struct SmoOptions {
  double c = 1.0;
  double tolerance = 1e-3;
  std::size_t max_iterations = 100000;
};

/// Dual solution of one C-SVC: min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0.
struct BinarySvmSolution {
  Vector alpha;
  double bias = 0.0;         // decision = sum alpha_i y_i K(x_i, x) + bias
  double kkt_gap = 0.0;      // max violating pair gap at exit
  std::size_t iterations = 0;
};

/// SMO with maximal-violating-pair working-set selection over a precomputed
/// kernel matrix.
inline BinarySvmSolution solve_smo(const Matrix& kernel, std::span<const double> y, const SmoOptions& opt) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (kernel.rows() != n || kernel.cols() != n) throw DataError("solve_smo: kernel/label size mismatch");
  bool has_pos = false, has_neg = false;
  for (double v : y) (v > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw DataError("SVM training data contains a single class");
  if (!(opt.c > 0.0)) throw ConfigError("SVM C must be > 0");

  constexpr double kTau = 1e-12;
  const double c = opt.c;
  Vector alpha = Vector::Zero(n);
  Vector grad = Vector::Constant(n, -1.0);  // Q alpha - e
  auto q = [&](Eigen::Index i, Eigen::Index j) { return y[i] * y[j] * kernel(i, j); };
  auto upper = [&](Eigen::Index t) { return alpha(t) >= c; };
  auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

  BinarySvmSolution sol;
  double gap = kInf;
  std::size_t iter = 0;
  for (;; ++iter) {
    double g_max = -kInf, g_max2 = -kInf;
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!upper(t) && -grad(t) >= g_max) { g_max = -grad(t); i = t; }
        if (!lower(t) && grad(t) >= g_max2) { g_max2 = grad(t); j = t; }
      } else {
        if (!lower(t) && grad(t) >= g_max) { g_max = grad(t); i = t; }
        if (!upper(t) && -grad(t) >= g_max2) { g_max2 = -grad(t); j = t; }
      }
    }
    gap = g_max + g_max2;
    if (gap < opt.tolerance || i < 0 || j < 0) break;
    if (iter >= opt.max_iterations)
      throw NumericError(strprintf("SMO did not converge in %zu iterations (KKT gap %.3g)", opt.max_iterations, gap));

    const double old_i = alpha(i), old_j = alpha(j);
    if (y[i] != y[j]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = -diff; }
      }
      if (diff > 0.0) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = c - diff; }
      } else {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = c + diff; }
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = sum - c; }
      } else {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = sum; }
      }
      if (sum > c) {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = sum - c; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = sum; }
      }
    }
    const double d_i = alpha(i) - old_i, d_j = alpha(j) - old_j;
    for (Eigen::Index t = 0; t < n; ++t) grad(t) += q(t, i) * d_i + q(t, j) * d_j;
  }

  // rho: average of y_i grad_i over free variables, else midpoint of bounds.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad(t);
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  sol.alpha = alpha;
  sol.bias = -rho;
  sol.kkt_gap = std::max(gap, 0.0);
  sol.iterations = iter;
  return sol;
}

/// Dual objective 0.5 a'Qa - e'a (lower is better).
inline double svm_dual_objective(const Matrix& kernel, std::span<const double> y, const Vector& alpha) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const Eigen::Map<const Vector> yv(y.data(), n);
  const Vector ay = alpha.cwiseProduct(yv);
  return 0.5 * ay.dot(kernel * ay) - alpha.sum();
}

struct BinarySvm {
  Matrix support_vectors;  // m x dim
  Vector coef;             // alpha_i * y_i
  double bias = 0.0;
  double kkt_gap = 0.0;
};

struct SvmConfig {
  KernelSpec kernel;
  double c = 1.0;
  bool length_normalize = true;
  double tolerance = 1e-3;
  std::size_t max_iterations = 100000;
};

struct SvmModel {
  KernelSpec kernel;  // gamma resolved
  double c = 1.0;
  bool length_normalize = true;
  std::vector<BinarySvm> classes;

  std::size_t num_classes() const { return classes.size(); }
};

inline Matrix kernel_matrix(const KernelSpec& k, const Matrix& rows) {
  const auto n = rows.rows();
  Matrix out(n, n);
  if (k.type == KernelType::kLinear) {
    out.noalias() = rows * rows.transpose();
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) out(i, j) = out(j, i) = k(rows.row(i).transpose(), rows.row(j).transpose());
  return out;
}

/// Fills in data-dependent defaults: poly gamma = 1/dim, rbf gamma =
/// 1/(dim * var(data)).
inline KernelSpec resolve_kernel(KernelSpec k, const Matrix& data) {
  if (k.gamma > 0.0) return k;
  const auto dim = static_cast<double>(data.cols());
  if (k.type == KernelType::kRbf) {
    const double mean = data.mean();
    const double var = (data.array() - mean).square().mean();
    k.gamma = var > 0.0 ? 1.0 / (dim * var) : 1.0 / dim;
  } else {
    k.gamma = 1.0 / dim;
  }
  return k;
}

/// One C-SVC per class (class vs. rest).
inline SvmModel train_svm_ovr(std::span<const Vector> vectors, std::span<const std::size_t> labels,
                              std::size_t n_classes, const SvmConfig& cfg) {
  detail::check_labelled(vectors, labels);
  if (n_classes < 2) throw DataError("one-vs-rest SVM needs at least two classes");
  const auto n = static_cast<Eigen::Index>(vectors.size());
  Matrix data(n, vectors[0].size());
  for (Eigen::Index i = 0; i < n; ++i)
    data.row(i) = (cfg.length_normalize ? length_normalize(vectors[static_cast<std::size_t>(i)])
                                        : vectors[static_cast<std::size_t>(i)])
                      .transpose();
  SvmModel model;
  model.kernel = resolve_kernel(cfg.kernel, data);
  model.c = cfg.c;
  model.length_normalize = cfg.length_normalize;
  const Matrix gram = kernel_matrix(model.kernel, data);
  model.classes.resize(n_classes);
  SmoOptions opt{cfg.c, cfg.tolerance, cfg.max_iterations};
  parallel_for(n_classes, [&](std::size_t cls) {
    std::vector<double> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] == cls ? 1.0 : -1.0;
    const BinarySvmSolution sol = solve_smo(gram, y, opt);
    std::vector<Eigen::Index> sv;
    for (Eigen::Index i = 0; i < n; ++i)
      if (sol.alpha(i) > 0.0) sv.push_back(i);
    BinarySvm& out = model.classes[cls];
    out.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), data.cols());
    out.coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
      out.support_vectors.row(static_cast<Eigen::Index>(s)) = data.row(sv[s]);
      out.coef(static_cast<Eigen::Index>(s)) = sol.alpha(sv[s]) * y[static_cast<std::size_t>(sv[s])];
    }
    out.bias = sol.bias;
    out.kkt_gap = sol.kkt_gap;
  });
  return model;
}

inline Vector svm_scores(const SvmModel& model, const Vector& v) {
  if (model.classes.empty()) throw DataError("svm_scores: empty model");
  const Vector x = model.length_normalize ? length_normalize(v) : v;
  Vector out(static_cast<Eigen::Index>(model.classes.size()));
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    const BinarySvm& b = model.classes[c];
    if (b.support_vectors.rows() > 0 && b.support_vectors.cols() != x.size())
      throw DataError("svm_scores: dimension mismatch");
    double sum = b.bias;
    for (Eigen::Index s = 0; s < b.support_vectors.rows(); ++s)
      sum += b.coef(s) * model.kernel(b.support_vectors.row(s).transpose(), x);
    out(static_cast<Eigen::Index>(c)) = sum;
  }
  return out;
}

inline Json to_json(const SvmModel& m) {
  Json j = make_envelope("SvmModel");
  j["kernel"] = to_json(m.kernel);
  j["C"] = m.c;
  j["length_normalize"] = m.length_normalize;
  Json classes = Json::array();
  for (const auto& b : m.classes) {
    classes.push_back(Json{{"n_sv", b.support_vectors.rows()},
                           {"dim", b.support_vectors.cols()},
                           {"bias", b.bias},
                           {"kkt_gap", b.kkt_gap},
                           {"coef", vector_to_json(b.coef)},
                           {"support_vectors", matrix_to_json(b.support_vectors)}});
  }
  j["classes"] = std::move(classes);
  return j;
}

inline SvmModel svm_model_from_json(const Json& j) {
  check_envelope(j, "SvmModel");
  SvmModel m;
  m.kernel = kernel_from_json(j.at("kernel"));
  m.c = j.at("C").get<double>();
  m.length_normalize = j.at("length_normalize").get<bool>();
  for (const auto& cj : j.at("classes")) {
    BinarySvm b;
    const auto n_sv = cj.at("n_sv").get<Eigen::Index>();
    b.bias = cj.at("bias").get<double>();
    b.kkt_gap = cj.value("kkt_gap", 0.0);
    b.coef = vector_from_json(cj.at("coef"), n_sv);
    b.support_vectors = matrix_from_json(cj.at("support_vectors"), n_sv, cj.at("dim").get<Eigen::Index>());
    m.classes.push_back(std::move(b));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Calibration

/// Softmax over scale*raw with a flat prior, returned as per-language log-odds
/// l_i = ln(p_i / (1 - p_i)). Strictly increasing in each raw score, so the
/// ranking within a segment is preserved. -inf inputs map to -inf.
inline Vector calibrate_scores(const Vector& raw, double scale = 1.0) {
  const auto n = raw.size();
  Vector out(n);
  std::vector<double> others;
  others.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (raw(i) == -kInf) {
      out(i) = -kInf;
      continue;
    }
    others.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) others.push_back(scale * raw(j));
    out(i) = scale * raw(i) - log_sum_exp(others);
  }
  return out;
}

/// Maximum-likelihood softmax scale for labelled raw score vectors (training
/// data only). Bisection on the derivative of the concave log-likelihood,
/// clamped to [1e-3, 1e3].
inline double fit_calibration_scale(std::span<const Vector> raw, std::span<const std::size_t> labels) {
  if (raw.size() != labels.size() || raw.empty()) throw DataError("fit_calibration_scale: bad input sizes");
  auto slope = [&](double a) {
    double g = 0.0;
    for (std::size_t s = 0; s < raw.size(); ++s) {
      const Vector z = a * raw[s];
      const double lse = log_sum_exp(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
      const Vector p = (z.array() - lse).exp();
      g += raw[s](static_cast<Eigen::Index>(labels[s])) - p.dot(raw[s]);
    }
    return g;
  };
  double lo = std::log(1e-3), hi = std::log(1e3);
  if (slope(std::exp(hi)) >= 0.0) return std::exp(hi);
  if (slope(std::exp(lo)) <= 0.0) return std::exp(lo);
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(std::exp(mid)) > 0.0 ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace olr
