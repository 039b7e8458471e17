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

#include <gtest/gtest.h>

#include "olr/ubm.hpp"
#include "support/oracles.hpp"

namespace olr {
namespace {

FeatureMatrix gaussian_frames(Rng& rng, std::size_t n, const Vector& mean, const Vector& sd) {
  FeatureMatrix f(static_cast<Eigen::Index>(n), mean.size());
  for (Eigen::Index t = 0; t < f.rows(); ++t)
    for (Eigen::Index j = 0; j < f.cols(); ++j) f(t, j) = mean(j) + sd(j) * rng.normal();
  return f;
}

TEST(Ubm, SingleComponentIsGlobalMoments) {
  Rng rng(1);
  std::vector<FeatureMatrix> data = {gaussian_frames(rng, 300, Vector::Constant(3, 2.0), Vector::Constant(3, 0.5)),
                                     gaussian_frames(rng, 200, Vector::Constant(3, -1.0), Vector::Constant(3, 1.5))};
  EmConfig cfg;
  cfg.n_components = 1;
  cfg.n_iterations = 3;
  const auto g = train_ubm(data, cfg);
  FeatureMatrix all(500, 3);
  all << data[0], data[1];
  const Vector mean = all.colwise().mean().transpose();
  const Vector var = (all.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
  EXPECT_LT((g.means.row(0).transpose() - mean).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((g.variances.row(0).transpose() - var).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_DOUBLE_EQ(g.weights(0), 1.0);
}

TEST(Ubm, RecoversWellSeparatedGaussians) {
  Rng rng(2);
  const Vector sd = Vector::Ones(2);
  std::vector<FeatureMatrix> data = {gaussian_frames(rng, 2000, Vector::Zero(2), sd),
                                     gaussian_frames(rng, 2000, Vector::Constant(2, 10.0), sd)};
  EmConfig cfg;
  cfg.n_components = 2;
  cfg.n_iterations = 20;
  const auto g = train_ubm(data, cfg);
  const Eigen::Index lo = g.means(0, 0) < g.means(1, 0) ? 0 : 1;
  EXPECT_LT(g.means.row(lo).cwiseAbs().maxCoeff(), 0.1);
  EXPECT_LT((g.means.row(1 - lo).array() - 10.0).abs().maxCoeff(), 0.1);
  EXPECT_NEAR(g.weights(0), 0.5, 0.02);
}

TEST(Ubm, LogLikelihoodAtMeanHasClosedForm) {
  DiagGmm g;
  g.weights = Vector::Ones(1);
  g.means = RowMatrix::Zero(1, 3);
  g.means << 1.0, -2.0, 0.5;
  g.variances = RowMatrix::Zero(1, 3);
  g.variances << 0.5, 2.0, 4.0;
  g.variance_floor = Vector::Constant(3, 1e-6);
  const double expected = -0.5 * (3.0 * std::log(2.0 * M_PI) + std::log(0.5 * 2.0 * 4.0));
  EXPECT_NEAR(gmm_log_likelihood(g, g.means.row(0).transpose()), expected, 1e-12);
}

TEST(Ubm, FiniteFarFromEveryMean) {
  Rng rng(3);
  const auto g = testing::random_gmm(rng, 8, 5);
  const Vector far = Vector::Constant(5, 100.0 * std::sqrt(g.variances.maxCoeff()) + 10.0);
  const double ll = gmm_log_likelihood(g, far);
  EXPECT_TRUE(std::isfinite(ll));
  FeatureMatrix one = far.transpose();
  const auto s = accumulate_stats(g, one);
  EXPECT_TRUE(s.n.allFinite());
  EXPECT_NEAR(s.n.sum(), 1.0, 1e-12);
}

TEST(Ubm, MatchesNaiveOracle) {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = testing::random_gmm(rng, 1 + rng.index(6), 1 + rng.index(5));
    Vector x(static_cast<Eigen::Index>(g.dim()));
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = 3.0 * rng.normal();
    EXPECT_NEAR(gmm_log_likelihood(g, x), testing::gmm_loglik_oracle(g, x), 1e-10);
  }
}

TEST(Ubm, ResponsibilitiesMatchBruteForce) {
  Rng rng(5);
  const auto g = testing::random_gmm(rng, 4, 3);
  const auto frames = gaussian_frames(rng, 50, Vector::Zero(3), Vector::Constant(3, 2.0));
  const auto s = accumulate_stats(g, frames);
  Vector n = Vector::Zero(4);
  RowMatrix f = RowMatrix::Zero(4, 3);
  for (Eigen::Index t = 0; t < 50; ++t) {
    const auto post = testing::responsibilities_oracle(g, frames.row(t).transpose());
    for (Eigen::Index c = 0; c < 4; ++c) {
      n(c) += post[static_cast<std::size_t>(c)];
      f.row(c) += post[static_cast<std::size_t>(c)] * (frames.row(t) - g.means.row(c));
    }
  }
  EXPECT_LT((s.n - n).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((s.f - f).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(s.n.sum(), 50.0, 1e-10);
  EXPECT_EQ(s.total_frames, 50.0);
}

TEST(Ubm, StatsAreAdditive) {
  Rng rng(6);
  const auto g = testing::random_gmm(rng, 5, 4);
  const auto frames = gaussian_frames(rng, 80, Vector::Zero(4), Vector::Constant(4, 2.0));
  const auto whole = accumulate_stats(g, frames);
  auto parts = accumulate_stats(g, frames.topRows(30));
  parts += accumulate_stats(g, frames.bottomRows(50));
  EXPECT_LT((whole.n - parts.n).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((whole.f - parts.f).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(parts.total_frames, 80.0);
}

TEST(Ubm, LogLikelihoodIsMonotone) {
  Rng rng(7);
  std::vector<FeatureMatrix> data;
  for (int s = 0; s < 6; ++s) {
    Vector mean(3);
    mean << 3.0 * (s % 3), -2.0 * (s % 2), s * 0.5;
    data.push_back(gaussian_frames(rng, 400, mean, Vector::Constant(3, 0.5 + 0.2 * s)));
  }
  EmConfig cfg;
  cfg.n_components = 8;
  cfg.n_iterations = 20;
  std::vector<double> hist;
  const auto g = train_ubm(data, cfg, &hist);
  ASSERT_EQ(hist.size(), 20U);
  for (std::size_t i = 1; i < hist.size(); ++i) EXPECT_GE(hist[i], hist[i - 1] - 1e-6 * std::abs(hist[i - 1]));
  EXPECT_NO_THROW(g.check());
}

TEST(Ubm, VarianceFloorHolds) {
  Rng rng(8);
  FeatureMatrix f = gaussian_frames(rng, 500, Vector::Zero(2), Vector::Ones(2));
  f.col(1).setConstant(1.0);  // degenerate dimension
  f(0, 1) = 1.5;
  EmConfig cfg;
  cfg.n_components = 4;
  cfg.n_iterations = 5;
  const auto g = train_ubm(std::vector<FeatureMatrix>{f}, cfg);
  for (Eigen::Index c = 0; c < 4; ++c) EXPECT_GE(g.variances(c, 1), g.variance_floor(1));
}

TEST(Ubm, DeterministicAcrossWorkerCounts) {
  Rng rng(9);
  std::vector<FeatureMatrix> data;
  for (int s = 0; s < 20; ++s) data.push_back(gaussian_frames(rng, 100, Vector::Constant(4, s % 4), Vector::Ones(4)));
  EmConfig cfg;
  cfg.n_components = 6;
  cfg.n_iterations = 5;
  const auto a = train_ubm(data, cfg);
  set_num_workers(4);
  const auto b = train_ubm(data, cfg);
  set_num_workers(1);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Ubm, JsonRoundTripAndErrors) {
  Rng rng(10);
  const auto g = testing::random_gmm(rng, 3, 2);
  const auto back = diag_gmm_from_json(to_json(g));
  EXPECT_EQ(back.means, g.means);
  EXPECT_EQ(back.variances, g.variances);
  EXPECT_EQ(back.weights, g.weights);
  EXPECT_THROW(gmm_log_likelihood(g, Vector::Zero(5)), DataError);
  EmConfig cfg;
  cfg.n_components = 10;
  EXPECT_THROW(train_ubm(std::vector<FeatureMatrix>{FeatureMatrix::Zero(5, 2)}, cfg), DataError);
}

}  // namespace
}  // namespace olr
