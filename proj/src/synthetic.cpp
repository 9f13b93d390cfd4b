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
#include "psivar/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "psivar/posterior.hpp"

namespace psivar {

namespace {

constexpr double kPoleTolerance = 1e-6;

bool near_complex_pole(const Eigen::Ref<const VectorXd>& x5) {
  return std::abs(1.0 + x5[0] + x5[4]) < kPoleTolerance;
}

void draw_row(VectorXd& row, FeatureKind kind, int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(-2.0, 2.0);
  std::bernoulli_distribution coin(0.5);
  for (int j = 0; j < dim; ++j) row[j] = uniform(rng);
  if (kind == FeatureKind::kMixture) {
    // 1-indexed columns 1,2 (causal) and 6,7 (non-causal) are Bernoulli(0.5)
    for (const int j : {0, 1, 5, 6})
      if (j < dim) row[j] = coin(rng) ? 1.0 : 0.0;
  }
}

MatrixXd draw_features(int n, const SyntheticSpec& spec, bool avoid_pole,
                       std::mt19937_64& rng) {
  MatrixXd x(n, spec.dim);
  VectorXd row(spec.dim);
  for (int i = 0; i < n; ++i) {
    do {
      draw_row(row, spec.features, spec.dim, rng);
    } while (avoid_pole && near_complex_pole(row.head(5)));
    x.row(i) = row;
  }
  return x;
}

}  // namespace

std::string outcome_name(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::kLinear:
      return "linear";
    case OutcomeKind::kRbf:
      return "rbf";
    case OutcomeKind::kMatern32:
      return "matern32";
    case OutcomeKind::kComplex:
      return "complex";
  }
  return "linear";
}

OutcomeKind outcome_from_name(const std::string& name) {
  if (name == "linear") return OutcomeKind::kLinear;
  if (name == "rbf") return OutcomeKind::kRbf;
  if (name == "matern32") return OutcomeKind::kMatern32;
  if (name == "complex") return OutcomeKind::kComplex;
  throw DataError("unknown outcome kind: " + name);
}

std::string feature_kind_name(FeatureKind kind) {
  return kind == FeatureKind::kContinuous ? "continuous" : "mixture";
}

FeatureKind feature_kind_from_name(const std::string& name) {
  if (name == "continuous") return FeatureKind::kContinuous;
  if (name == "mixture") return FeatureKind::kMixture;
  throw DataError("unknown feature kind: " + name);
}

double f0_linear(const Eigen::Ref<const VectorXd>& x5) {
  return x5[0] - x5[1] + x5[2] + 0.5 * x5[3] + 2.0 * x5[4];
}

double f0_complex(const Eigen::Ref<const VectorXd>& x5) {
  const double denom = 1.0 + x5[0] + x5[4];
  if (std::abs(denom) < kPoleTolerance)
    throw DataError("complex outcome evaluated on its singular set");
  return (std::sin(std::max(x5[0], x5[1])) + std::atan(x5[1])) / denom +
         std::sin(0.5 * x5[2]) * (1.0 + std::exp(x5[3] - 0.5 * x5[2])) + x5[2] * x5[2] +
         2.0 * std::sin(x5[3]) + 4.0 * x5[4];
}

double rbf_kernel(double r, double lengthscale) {
  return std::exp(-r * r / (2.0 * lengthscale * lengthscale));
}

double matern32_kernel(double r, double lengthscale) {
  const double t = std::numbers::sqrt3 * r / lengthscale;
  return (1.0 + t) * std::exp(-t);
}

VectorXd sample_gp_outcome(OutcomeKind kernel, const Eigen::Ref<const MatrixXd>& points,
                           double lengthscale, std::mt19937_64& rng) {
  require(kernel == OutcomeKind::kRbf || kernel == OutcomeKind::kMatern32,
          "latent outcome sampling applies to rbf and matern32 only");
  const Eigen::Index m = points.rows();
  require(m >= 1, "need at least one point");
  MatrixXd cov(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    cov(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double r = (points.row(i) - points.row(j)).norm();
      const double k = kernel == OutcomeKind::kRbf ? rbf_kernel(r, lengthscale)
                                                   : matern32_kernel(r, lengthscale);
      cov(i, j) = k;
      cov(j, i) = k;
    }
  }
  cov.diagonal().array() += 1e-8;
  const auto llt = cholesky_with_jitter(cov);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = gauss(rng);
  return MatrixXd(llt.matrixL()) * z;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  require(spec.dim >= spec.n_causal, "dimension must be at least the causal count");
  require(spec.n_train >= 1 && spec.test_size() >= 1, "sizes must be at least 1");
  require(spec.n_causal == 5, "outcome functions are defined on five causal variables");

  auto rng = derive_rng(spec.seed, 0x5f3e);
  const bool avoid_pole = spec.f0 == OutcomeKind::kComplex;

  SyntheticData data;
  data.x_train = draw_features(spec.n_train, spec, avoid_pole, rng);
  data.x_test = draw_features(spec.test_size(), spec, avoid_pole, rng);

  data.causal_mask.assign(spec.dim, false);
  for (int j = 0; j < spec.n_causal; ++j) data.causal_mask[j] = true;
  if (spec.features == FeatureKind::kMixture)
    for (const int j : {0, 1, 5, 6})
      if (j < spec.dim) data.discrete_columns.push_back(j);

  const int n = spec.n_train;
  const int nt = spec.test_size();
  data.f_train.resize(n);
  data.f_test.resize(nt);
  if (spec.f0 == OutcomeKind::kLinear || spec.f0 == OutcomeKind::kComplex) {
    const auto f0 = spec.f0 == OutcomeKind::kLinear ? f0_linear : f0_complex;
    for (int i = 0; i < n; ++i) data.f_train[i] = f0(data.x_train.row(i).head(5));
    for (int i = 0; i < nt; ++i) data.f_test[i] = f0(data.x_test.row(i).head(5));
  } else {
    MatrixXd joint(n + nt, spec.n_causal);
    joint.topRows(n) = data.x_train.leftCols(spec.n_causal);
    joint.bottomRows(nt) = data.x_test.leftCols(spec.n_causal);
    const VectorXd latent = sample_gp_outcome(spec.f0, joint, spec.lengthscale, rng);
    data.f_train = latent.head(n);
    data.f_test = latent.tail(nt);
  }

  std::normal_distribution<double> noise(0.0, std::sqrt(spec.noise_variance));
  data.y_train = data.f_train;
  data.y_test = data.f_test;
  for (int i = 0; i < n; ++i) data.y_train[i] += noise(rng);
  for (int i = 0; i < nt; ++i) data.y_test[i] += noise(rng);
  return data;
}

double auroc(const Eigen::Ref<const VectorXd>& scores, const std::vector<bool>& causal_mask) {
  require(scores.size() == static_cast<Eigen::Index>(causal_mask.size()),
          "score and mask lengths must match");
  const auto n = scores.size();
  long n_causal = std::count(causal_mask.begin(), causal_mask.end(), true);
  if (n_causal == 0 || n_causal == n)
    throw DataError("AUROC needs at least one causal and one non-causal variable");

  // midranks
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index t = i; t <= j; ++t) rank[order[t]] = mid;
    i = j + 1;
  }
  double rank_sum = 0.0;
  for (Eigen::Index t = 0; t < n; ++t)
    if (causal_mask[static_cast<std::size_t>(t)]) rank_sum += rank[t];
  const double nc = static_cast<double>(n_causal);
  const double nn = static_cast<double>(n - n_causal);
  return (rank_sum - nc * (nc + 1.0) / 2.0) / (nc * nn);
}

}  // namespace psivar
