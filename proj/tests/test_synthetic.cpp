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

#include <cmath>
#include <numbers>
#include <set>

#include "psivar/benchmark.hpp"
#include "psivar/posterior.hpp"
#include "psivar/synthetic.hpp"

using namespace psivar;

namespace {

VectorXd vec5(double a, double b, double c, double d, double e) {
  VectorXd v(5);
  v << a, b, c, d, e;
  return v;
}

// brute force over all causal/non-causal pairs, ties counting one half
double auroc_bruteforce(const VectorXd& scores, const std::vector<bool>& mask) {
  double wins = 0.0;
  long pairs = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (!mask[i]) continue;
    for (Eigen::Index j = 0; j < scores.size(); ++j) {
      if (mask[j]) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("continuous features live in the uniform support") {
  SyntheticSpec spec;
  spec.f0 = OutcomeKind::kLinear;
  spec.n_train = 80;
  spec.dim = 12;
  spec.seed = 3;
  const SyntheticData data = generate_synthetic(spec);
  CHECK(data.x_train.minCoeff() >= -2.0);
  CHECK(data.x_train.maxCoeff() <= 2.0);
  CHECK(data.discrete_columns.empty());
  CHECK(data.causal_mask == std::vector<bool>{true, true, true, true, true, false, false, false,
                                              false, false, false, false});
}

TEST_CASE("mixture design makes columns 1,2,6,7 bernoulli") {
  SyntheticSpec spec;
  spec.features = FeatureKind::kMixture;
  spec.n_train = 120;
  spec.dim = 10;
  spec.seed = 4;
  const SyntheticData data = generate_synthetic(spec);
  CHECK(data.discrete_columns == std::vector<int>{0, 1, 5, 6});
  for (const int j : data.discrete_columns)
    for (int i = 0; i < 120; ++i)
      CHECK((data.x_train(i, j) == 0.0 || data.x_train(i, j) == 1.0));
  // all other columns stay continuous with full support
  CHECK(data.x_train.col(2).minCoeff() < 0.0);
  CHECK(data.x_train.col(2).maxCoeff() > 0.0);
}

TEST_CASE("generation is deterministic in the seed") {
  SyntheticSpec spec;
  spec.f0 = OutcomeKind::kMatern32;
  spec.n_train = 30;
  spec.dim = 6;
  spec.seed = 11;
  const SyntheticData a = generate_synthetic(spec);
  const SyntheticData b = generate_synthetic(spec);
  CHECK((a.x_train - b.x_train).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y_train - b.y_train).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y_test - b.y_test).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear outcome evaluates its printed formula") {
  CHECK(f0_linear(vec5(1, 1, 1, 1, 1)) == doctest::Approx(3.5));
  CHECK(f0_linear(vec5(0, 0, 0, 0, 0)) == 0.0);
  CHECK(f0_linear(vec5(1, 2, 0, 0, 0)) == doctest::Approx(-1.0));
}

TEST_CASE("complex outcome evaluates its printed formula") {
  CHECK(f0_complex(vec5(0, 0, 0, 0, 0)) == doctest::Approx(0.0));
  // independent evaluation at a second point
  const double x1 = 0.5, x2 = -1.0, x3 = 1.5, x4 = 0.25, x5 = -0.75;
  const double expected =
      (std::sin(std::max(x1, x2)) + std::atan(x2)) / (1.0 + x1 + x5) +
      std::sin(0.5 * x3) * (1.0 + std::exp(x4 - 0.5 * x3)) + x3 * x3 + 2.0 * std::sin(x4) +
      4.0 * x5;
  CHECK(f0_complex(vec5(x1, x2, x3, x4, x5)) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(f0_complex(vec5(-0.5, 0, 0, 0, -0.5)), DataError);
}

TEST_CASE("outcome kernels at zero distance and the matern value at r = l") {
  CHECK(rbf_kernel(0.0, 1.0) == 1.0);
  CHECK(matern32_kernel(0.0, 1.0) == 1.0);
  const double expected = (1.0 + std::numbers::sqrt3) * std::exp(-std::numbers::sqrt3);
  CHECK(matern32_kernel(1.0, 1.0) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(matern32_kernel(1.0, 1.0) == doctest::Approx(0.4833577245965077).epsilon(1e-12));
  CHECK(rbf_kernel(1.0, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
}

TEST_CASE("identical points receive identical latent values") {
  MatrixXd points(3, 5);
  points.setZero();
  points.row(0) << 1, 2, 3, 4, 5;
  points.row(1) << 1, 2, 3, 4, 5;
  points.row(2) << -1, 0, 1, 0, -1;
  auto rng = make_rng(7);
  const VectorXd values = sample_gp_outcome(OutcomeKind::kMatern32, points, 1.0, rng);
  CHECK(std::abs(values[0] - values[1]) < 1e-3);
  CHECK(std::abs(values[0] - values[2]) > 1e-6);
}

TEST_CASE("latent draws reproduce the kernel covariance jointly") {
  // whitening the union vector by the joint kernel factor must produce
  // standard normal coordinates; an independent train/test redraw would not
  MatrixXd points(6, 5);
  auto rng = make_rng(8);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (Eigen::Index i = 0; i < points.size(); ++i) points.data()[i] = uniform(rng);
  MatrixXd kernel(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      kernel(i, j) = matern32_kernel((points.row(i) - points.row(j)).norm(), 3.0);
  kernel.diagonal().array() += 1e-8;
  const Eigen::LLT<MatrixXd> llt(kernel);

  const int repeats = 400;
  MatrixXd whitened(repeats, 6);
  for (int r = 0; r < repeats; ++r) {
    auto draw_rng = make_rng(1000 + r);
    const VectorXd f = sample_gp_outcome(OutcomeKind::kMatern32, points, 3.0, draw_rng);
    whitened.row(r) = llt.matrixL().solve(f);
  }
  for (int i = 0; i < 6; ++i) {
    const double mean = whitened.col(i).mean();
    const double var = (whitened.col(i).array() - mean).square().sum() / (repeats - 1);
    CHECK(std::abs(mean) < 0.2);
    CHECK(var > 0.7);
    CHECK(var < 1.35);
  }
}

TEST_CASE("train and test outcomes come from one joint draw") {
  // same check against the generator itself: whiten the concatenated
  // noiseless outcomes by the joint kernel over (train, test) points
  const int repeats = 300;
  VectorXd pooled(repeats * 6);
  for (int r = 0; r < repeats; ++r) {
    SyntheticSpec spec;
    spec.f0 = OutcomeKind::kMatern32;
    spec.n_train = 3;
    spec.n_test = 3;
    spec.dim = 5;
    spec.lengthscale = 3.0;
    spec.seed = 5000 + r;
    const SyntheticData data = generate_synthetic(spec);
    MatrixXd joint(6, 5);
    joint.topRows(3) = data.x_train.leftCols(5);
    joint.bottomRows(3) = data.x_test.leftCols(5);
    MatrixXd kernel(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        kernel(i, j) = matern32_kernel((joint.row(i) - joint.row(j)).norm(), 3.0);
    kernel.diagonal().array() += 1e-8;
    VectorXd f(6);
    f.head(3) = data.f_train;
    f.tail(3) = data.f_test;
    pooled.segment(r * 6, 6) = Eigen::LLT<MatrixXd>(kernel).matrixL().solve(f);
  }
  const double mean = pooled.mean();
  const double var = (pooled.array() - mean).square().sum() / (pooled.size() - 1);
  CHECK(std::abs(mean) < 0.1);
  CHECK(var > 0.85);
  CHECK(var < 1.18);
}

TEST_CASE("auroc counting and tie handling") {
  VectorXd top(8);
  top << 9, 8, 7, 6, 5, 1, 2, 3;
  std::vector<bool> mask = {true, true, true, true, true, false, false, false};
  CHECK(auroc(top, mask) == 1.0);

  const VectorXd flat = VectorXd::Constant(8, 2.0);
  CHECK(auroc(flat, mask) == 0.5);

  VectorXd three(3);
  three << 3, 2, 1;
  std::vector<bool> mixed = {true, false, true};
  CHECK(auroc(three, mixed) == doctest::Approx(auroc_bruteforce(three, mixed)));
  CHECK(auroc(three, mixed) == doctest::Approx(0.5));

  CHECK_THROWS_AS(auroc(three, std::vector<bool>{true, true, true}), DataError);
  CHECK_THROWS_AS(auroc(three, std::vector<bool>{false, false, false}), DataError);
}

TEST_CASE("auroc equals the brute-force pair count on random scores") {
  auto rng = make_rng(9);
  std::normal_distribution<double> gauss;
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 30; ++trial) {
    VectorXd scores(12);
    std::vector<bool> mask(12);
    int causal = 0;
    for (int j = 0; j < 12; ++j) {
      scores[j] = std::round(gauss(rng) * 3.0) / 3.0;  // induce ties
      mask[j] = coin(rng);
      causal += mask[j] ? 1 : 0;
    }
    if (causal == 0 || causal == 12) continue;
    CHECK(auroc(scores, mask) == doctest::Approx(auroc_bruteforce(scores, mask)).epsilon(1e-12));
  }
}

TEST_CASE("auroc is invariant under strictly increasing transforms") {
  auto rng = make_rng(10);
  std::normal_distribution<double> gauss;
  VectorXd scores(10);
  for (int j = 0; j < 10; ++j) scores[j] = gauss(rng);
  std::vector<bool> mask = {true, false, true, false, true, false, false, true, false, true};
  const double base = auroc(scores, mask);
  CHECK(auroc(scores.array().exp().matrix(), mask) == doctest::Approx(base));
  CHECK(auroc((scores.array() * 3.7 + 11.0).matrix(), mask) == doctest::Approx(base));
  // complement under negation when no ties exist
  CHECK(auroc((-scores.array()).matrix(), mask) == doctest::Approx(1.0 - base));
}

TEST_CASE("benchmark cell seeds are stable and content-addressed") {
  const BenchScenario scenario{OutcomeKind::kMatern32, FeatureKind::kMixture, 100, 25};
  CHECK(bench_cell_seed(0, scenario, 0) == bench_cell_seed(0, scenario, 0));
  CHECK(bench_cell_seed(0, scenario, 0) != bench_cell_seed(0, scenario, 1));
  CHECK(bench_cell_seed(0, scenario, 0) != bench_cell_seed(1, scenario, 0));
  BenchScenario other = scenario;
  other.n = 200;
  CHECK(bench_cell_seed(0, scenario, 0) != bench_cell_seed(0, other, 0));
  CHECK(bench_key(scenario, "rfnn", 7) == "matern32|mixture|100|25|rfnn|7");
}

TEST_CASE("a minimal benchmark grid produces one row per cell") {
  BenchConfig config;
  config.scenarios = {{OutcomeKind::kLinear, FeatureKind::kContinuous, 60, 8}};
  config.methods = {"additive_basis"};
  config.repeats = 1;
  const auto results = run_benchmark(config);
  REQUIRE(results.size() == 1);
  CHECK(results[0].ok);
  CHECK(results[0].auroc >= 0.0);
  CHECK(results[0].auroc <= 1.0);
  CHECK(results[0].test_mse >= 0.0);

  // determinism of the scored fields
  const auto again = run_benchmark(config);
  CHECK(results[0].auroc == again[0].auroc);
  CHECK(results[0].test_mse == again[0].test_mse);
  CHECK(results_to_csv(results, false) == results_to_csv(again, false));

  // resume skips completed keys
  std::set<std::string> done = {
      bench_key(results[0].scenario, results[0].method, results[0].seed)};
  CHECK(run_benchmark(config, done).empty());
}

TEST_CASE("per-cell failures are recorded without aborting the grid") {
  BenchConfig config;
  config.scenarios = {{OutcomeKind::kLinear, FeatureKind::kContinuous, 60, 8}};
  config.methods = {"no_such_method", "additive_basis"};
  config.repeats = 1;
  const auto results = run_benchmark(config);
  REQUIRE(results.size() == 2);
  CHECK_FALSE(results[0].ok);
  CHECK(std::isnan(results[0].auroc));
  CHECK(!results[0].note.empty());
  CHECK(results[1].ok);
}
