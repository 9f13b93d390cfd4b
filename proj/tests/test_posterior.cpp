/*
 * Copyright 2026 The psivar Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "psivar/feature_map.hpp"
#include "psivar/posterior.hpp"

using namespace psivar;

namespace {

struct Problem {
  MatrixXd phi;
  VectorXd y;
};

Problem random_problem(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Problem p;
  p.phi.resize(n, d);
  p.y.resize(n);
  for (Eigen::Index i = 0; i < p.phi.size(); ++i) p.phi.data()[i] = gauss(rng);
  for (int i = 0; i < n; ++i) p.y[i] = gauss(rng);
  return p;
}

// one-shot dense evaluation of the closed-form weight posterior
WeightPosterior dense_posterior(const MatrixXd& phi, const VectorXd& y, double sigma2,
                                const VectorXd& mu) {
  const int d = static_cast<int>(phi.cols());
  const MatrixXd s =
      MatrixXd::Identity(d, d) + phi.transpose() * phi / sigma2;
  WeightPosterior out;
  out.cov = s.ldlt().solve(MatrixXd::Identity(d, d));
  out.mean = mu + out.cov * (phi.transpose() * (y - phi * mu)) / sigma2;
  return out;
}

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("no data recovers the prior") {
  PosteriorAccumulator acc(4, 1.0);
  const WeightPosterior post = acc.finalize();
  CHECK(max_abs(post.mean) == 0.0);
  CHECK(max_abs(post.cov - MatrixXd::Identity(4, 4)) < 1e-14);
}

TEST_CASE("two unit observations in one dimension") {
  // Phi = (1, 1)^T, y = (1, 1), sigma2 = 1: S = 3, P = 2, mean 2/3, cov 1/3
  MatrixXd phi(2, 1);
  phi << 1.0, 1.0;
  VectorXd y(2);
  y << 1.0, 1.0;
  PosteriorAccumulator acc(1, 1.0);
  acc.accumulate(phi, y);
  const WeightPosterior post = acc.finalize();
  CHECK(post.mean[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(post.cov(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("batch splits do not change the posterior") {
  const auto p = random_problem(64, 16, 100);
  PosteriorAccumulator full(16, 0.5);
  full.accumulate(p.phi, p.y);
  PosteriorAccumulator halves(16, 0.5);
  halves.accumulate(p.phi.topRows(32), p.y.head(32));
  halves.accumulate(p.phi.bottomRows(32), p.y.tail(32));
  const WeightPosterior a = full.finalize();
  const WeightPosterior b = halves.finalize();
  CHECK(max_abs(a.mean - b.mean) < 1e-10);
  CHECK(max_abs(a.cov - b.cov) < 1e-10);
  // and the one-shot dense oracle agrees
  const WeightPosterior c = dense_posterior(p.phi, p.y, 0.5, VectorXd::Zero(16));
  CHECK(max_abs(a.mean - c.mean) < 1e-10);
  CHECK(max_abs(a.cov - c.cov) < 1e-10);
}

TEST_CASE("batch order and partition invariance") {
  const auto p = random_problem(56, 8, 101);
  std::vector<int> order(56);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(7);
  std::vector<WeightPosterior> posteriors;
  for (const int batches : {1, 2, 7, 8}) {
    std::shuffle(order.begin(), order.end(), rng);
    MatrixXd phi = p.phi;
    VectorXd y = p.y;
    for (int i = 0; i < 56; ++i) {
      phi.row(i) = p.phi.row(order[i]);
      y[i] = p.y[order[i]];
    }
    PosteriorAccumulator acc(8, 0.25);
    const int step = 56 / batches;
    for (int start = 0; start < 56; start += step)
      acc.accumulate(phi.middleRows(start, std::min(step, 56 - start)),
                     y.segment(start, std::min(step, 56 - start)));
    posteriors.push_back(acc.finalize());
  }
  for (std::size_t i = 1; i < posteriors.size(); ++i) {
    CHECK(max_abs(posteriors[0].mean - posteriors[i].mean) < 1e-8);
    CHECK(max_abs(posteriors[0].cov - posteriors[i].cov) < 1e-8);
  }
}

TEST_CASE("precision and woodbury modes agree") {
  const auto p = random_problem(48, 12, 102);
  PosteriorAccumulator precision(12, 0.7, AccumulatorMode::kPrecision);
  PosteriorAccumulator woodbury(12, 0.7, AccumulatorMode::kWoodbury);
  for (int start = 0; start < 48; start += 16) {
    precision.accumulate(p.phi.middleRows(start, 16), p.y.segment(start, 16));
    woodbury.accumulate(p.phi.middleRows(start, 16), p.y.segment(start, 16));
  }
  const WeightPosterior a = precision.finalize();
  const WeightPosterior b = woodbury.finalize();
  CHECK(max_abs(a.mean - b.mean) < 1e-8);
  CHECK(max_abs(a.cov - b.cov) < 1e-8);
}

TEST_CASE("infinite noise keeps the prior") {
  const auto p = random_problem(32, 6, 103);
  VectorXd mu(6);
  mu << 1, -2, 0.5, 0, 3, -1;
  PosteriorAccumulator acc(6, 1e12, AccumulatorMode::kPrecision, mu);
  acc.accumulate(p.phi, p.y);
  const WeightPosterior post = acc.finalize();
  CHECK(max_abs(post.mean - mu) < 1e-6);
  CHECK(max_abs(post.cov - MatrixXd::Identity(6, 6)) < 1e-6);
}

TEST_CASE("orthonormal features halve the prior covariance") {
  const auto p = random_problem(40, 10, 104);
  const MatrixXd q = Eigen::HouseholderQR<MatrixXd>(p.phi).householderQ() *
                     MatrixXd::Identity(40, 10);
  PosteriorAccumulator acc(10, 1.0);
  acc.accumulate(q, p.y.head(40));
  const WeightPosterior post = acc.finalize();
  CHECK(max_abs(post.cov - 0.5 * MatrixXd::Identity(10, 10)) < 1e-12);
}

TEST_CASE("posterior covariance contracts as data accumulates") {
  const auto p = random_problem(60, 6, 105);
  PosteriorAccumulator acc(6, 1.0);
  VectorXd previous = VectorXd::Ones(6);
  for (int start = 0; start < 60; start += 12) {
    acc.accumulate(p.phi.middleRows(start, 12), p.y.segment(start, 12));
    const WeightPosterior post = acc.finalize();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(post.cov);
    const VectorXd current = eig.eigenvalues();
    for (int i = 0; i < 6; ++i) {
      CHECK(current[i] <= previous[i] + 1e-10);
      CHECK(current[i] > 0.0);
    }
    previous = current;
  }
}

TEST_CASE("precision state dominates identity and woodbury state is dominated") {
  const auto p = random_problem(30, 5, 106);
  PosteriorAccumulator precision(5, 0.3, AccumulatorMode::kPrecision);
  PosteriorAccumulator woodbury(5, 0.3, AccumulatorMode::kWoodbury);
  precision.accumulate(p.phi, p.y);
  woodbury.accumulate(p.phi, p.y);
  const VectorXd s_eigs = Eigen::SelfAdjointEigenSolver<MatrixXd>(precision.state_matrix())
                              .eigenvalues();
  const VectorXd w_eigs = Eigen::SelfAdjointEigenSolver<MatrixXd>(woodbury.state_matrix())
                              .eigenvalues();
  CHECK(s_eigs.minCoeff() >= 1.0 - 1e-12);
  CHECK(w_eigs.maxCoeff() <= 1.0 + 1e-12);
  CHECK(w_eigs.minCoeff() > 0.0);
}

TEST_CASE("precision-mode shards merge to the single-pass answer") {
  const auto p = random_problem(50, 7, 107);
  PosteriorAccumulator whole(7, 0.9);
  whole.accumulate(p.phi, p.y);
  PosteriorAccumulator shard_a(7, 0.9);
  PosteriorAccumulator shard_b(7, 0.9);
  shard_a.accumulate(p.phi.topRows(20), p.y.head(20));
  shard_b.accumulate(p.phi.bottomRows(30), p.y.tail(30));
  shard_a.merge(shard_b);
  CHECK(max_abs(whole.finalize().mean - shard_a.finalize().mean) < 1e-10);
  CHECK(max_abs(whole.finalize().cov - shard_a.finalize().cov) < 1e-10);
  CHECK(shard_a.sample_count() == 50);
}

TEST_CASE("empty and malformed batches") {
  PosteriorAccumulator acc(3, 1.0);
  acc.accumulate(MatrixXd(0, 3), VectorXd(0));  // no-op
  CHECK(acc.sample_count() == 0);
  MatrixXd bad(1, 3);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN(), 0.0;
  VectorXd y(1);
  y << 1.0;
  CHECK_THROWS_AS(acc.accumulate(bad, y), DataError);
  MatrixXd wrong(1, 2);
  wrong << 1.0, 2.0;
  CHECK_THROWS_AS(acc.accumulate(wrong, y), DimensionError);
  CHECK_THROWS_AS(PosteriorAccumulator(3, 0.0), DataError);
}

TEST_CASE("prediction extracts coordinates for one-hot rows") {
  const auto p = random_problem(30, 5, 108);
  PosteriorAccumulator acc(5, 1.0);
  acc.accumulate(p.phi, p.y);
  const WeightPosterior post = acc.finalize();
  MatrixXd probe = MatrixXd::Zero(2, 5);
  probe(0, 2) = 1.0;
  probe(1, 2) = 1.0;  // duplicated row
  const GpPrediction pred = predict(post, probe);
  CHECK(pred.mean[0] == doctest::Approx(post.mean[2]).epsilon(1e-14));
  CHECK(pred.cov(0, 0) == doctest::Approx(post.cov(2, 2)).epsilon(1e-14));
  // rank-deficient block for the duplicate
  CHECK(pred.mean[1] == pred.mean[0]);
  CHECK(pred.cov(0, 1) == doctest::Approx(pred.cov(0, 0)).epsilon(1e-14));
  CHECK(std::abs(pred.cov.determinant()) < 1e-12);
}

TEST_CASE("dual posterior trivial kernels") {
  // zero kernel: prior mean and zero covariance
  MatrixXd zero1(1, 1);
  zero1 << 0.0;
  VectorXd y1(1);
  y1 << 2.0;
  VectorXd ms(1);
  ms << 0.7;
  const GpPrediction zero = dual_gp_posterior(zero1, zero1, zero1, y1, 1.0, VectorXd::Zero(1), ms);
  CHECK(zero.mean[0] == doctest::Approx(0.7));
  CHECK(std::abs(zero.cov(0, 0)) < 1e-12);

  // constant unit kernel, one observation y = 2, sigma2 = 1
  MatrixXd one(1, 1);
  one << 1.0;
  const GpPrediction unit = dual_gp_posterior(one, one, one, y1, 1.0);
  CHECK(unit.mean[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(unit.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("feature-space and kernel-space posteriors coincide") {
  const RandomFourierMap map(4, 30, 1.2, 11);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss;
  MatrixXd x_train(100, 4), x_test(20, 4);
  VectorXd y(100);
  for (Eigen::Index i = 0; i < x_train.size(); ++i) x_train.data()[i] = gauss(rng);
  for (Eigen::Index i = 0; i < x_test.size(); ++i) x_test.data()[i] = gauss(rng);
  for (int i = 0; i < 100; ++i) y[i] = std::sin(x_train(i, 0)) + 0.1 * gauss(rng);

  const MatrixXd phi = map.evaluate_batch(x_train);
  const MatrixXd phi_star = map.evaluate_batch(x_test);
  PosteriorAccumulator acc(30, 0.04);
  acc.accumulate(phi, y);
  const GpPrediction primal = predict(acc.finalize(), phi_star);

  const GpPrediction dual = dual_gp_posterior(phi * phi.transpose(), phi_star * phi.transpose(),
                                              phi_star * phi_star.transpose(), y, 0.04);
  CHECK(max_abs(primal.mean - dual.mean) < 1e-8);
  CHECK(max_abs(primal.cov - dual.cov) < 1e-8);
}

TEST_CASE("weight samples track the posterior moments") {
  WeightPosterior post;
  post.mean = VectorXd(2);
  post.mean << 1.0, -0.5;
  post.cov.resize(2, 2);
  post.cov << 0.9, 0.3, 0.3, 0.4;

  auto rng = make_rng(42);
  const MatrixXd draws = post.sample(100000, rng);
  const VectorXd mean = draws.colwise().mean();
  MatrixXd centered = draws.rowwise() - mean.transpose();
  const MatrixXd cov = centered.transpose() * centered / (draws.rows() - 1.0);
  CHECK(max_abs(mean - post.mean) < 0.02);
  CHECK((cov - post.cov).norm() / post.cov.norm() < 0.05);

  auto rng_a = make_rng(43);
  auto rng_b = make_rng(43);
  CHECK(max_abs(post.sample(5, rng_a) - post.sample(5, rng_b)) == 0.0);
}

TEST_CASE("degenerate covariance collapses samples onto the mean") {
  WeightPosterior post;
  post.mean = VectorXd(3);
  post.mean << 2.0, -1.0, 0.5;
  post.cov = MatrixXd::Zero(3, 3);
  auto rng = make_rng(44);
  const MatrixXd draws = post.sample(10, rng);
  for (int s = 0; s < 10; ++s)
    CHECK(max_abs(draws.row(s).transpose() - post.mean) < 1e-14);
}

TEST_CASE("noise estimate recovers the generating variance") {
  std::mt19937_64 rng(45);
  std::normal_distribution<double> gauss(0.0, 0.1);
  const MatrixXd phi = MatrixXd::Zero(1000, 3);
  VectorXd y(1000);
  for (int i = 0; i < 1000; ++i) y[i] = gauss(rng);
  const double estimate = estimate_noise_variance(phi, y);
  CHECK(estimate > 0.007);
  CHECK(estimate < 0.013);
}

TEST_CASE("exact fits hit the noise floor") {
  const auto p = random_problem(200, 4, 109);
  // y = Phi beta with beta = 0: the residual vanishes and the floor binds
  const double floored = estimate_noise_variance(p.phi, VectorXd::Zero(200));
  CHECK(floored == 1e-8);
  // nonzero weights leave only the prior-shrinkage residual, of order
  // |beta|^2 / n^2
  VectorXd beta(4);
  beta << 1.0, -2.0, 0.5, 3.0;
  const double estimate = estimate_noise_variance(p.phi, p.phi * beta);
  CHECK(estimate < 1e-2);
  CHECK(estimate >= 1e-8);
  CHECK_THROWS_AS(estimate_noise_variance(MatrixXd(0, 4), VectorXd(0)), DataError);
}

TEST_CASE("factorization failures carry a smallest-eigenvalue diagnostic") {
  MatrixXd indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -4.0;
  bool thrown = false;
  try {
    cholesky_with_jitter(indefinite);
  } catch (const NumericalError& e) {
    thrown = true;
    CHECK(std::string(e.what()).find("smallest eigenvalue") != std::string::npos);
  }
  CHECK(thrown);
}

TEST_CASE("log evidence matches the direct gaussian density") {
  const auto p = random_problem(12, 3, 110);
  const double sigma2 = 0.6;
  PosteriorAccumulator acc(3, sigma2);
  acc.accumulate(p.phi.topRows(7), p.y.head(7));
  acc.accumulate(p.phi.bottomRows(5), p.y.tail(5));

  // direct evaluation of log N(y; 0, sigma2 I + Phi Phi^T)
  MatrixXd cov = p.phi * p.phi.transpose();
  cov.diagonal().array() += sigma2;
  const Eigen::LLT<MatrixXd> llt(cov);
  const MatrixXd l = llt.matrixL();
  double log_det = 0.0;
  for (int i = 0; i < 12; ++i) log_det += 2.0 * std::log(l(i, i));
  const double quad = p.y.dot(llt.solve(p.y));
  const double expected = -0.5 * (quad + log_det + 12.0 * std::log(2.0 * std::numbers::pi));
  CHECK(acc.log_evidence() == doctest::Approx(expected).epsilon(1e-10));
}
