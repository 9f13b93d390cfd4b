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
#ifndef PSIVAR_SYNTHETIC_HPP
#define PSIVAR_SYNTHETIC_HPP

#include <string>
#include <vector>

#include "psivar/common.hpp"

namespace psivar {

enum class OutcomeKind { kLinear, kRbf, kMatern32, kComplex };
enum class FeatureKind { kContinuous, kMixture };

std::string outcome_name(OutcomeKind kind);
OutcomeKind outcome_from_name(const std::string& name);
std::string feature_kind_name(FeatureKind kind);
FeatureKind feature_kind_from_name(const std::string& name);

/// Benchmark generator configuration. The first n_causal columns drive the
/// outcome; in the mixture design columns 1,2 (causal) and 6,7 (non-causal),
/// 1-indexed, are Bernoulli(0.5) and everything else is Unif(-2, 2).
struct SyntheticSpec {
  OutcomeKind f0 = OutcomeKind::kLinear;
  FeatureKind features = FeatureKind::kContinuous;
  int n_train = 100;
  int n_test = 0;  // 0: same as n_train
  int dim = 25;
  int n_causal = 5;
  double noise_variance = 0.01;
  double lengthscale = 1.0;  // rbf / matern32 outcome kernels
  std::uint64_t seed = 0;

  int test_size() const { return n_test > 0 ? n_test : n_train; }
};

struct SyntheticData {
  MatrixXd x_train, x_test;
  VectorXd f_train, f_test;  // noiseless outcomes
  VectorXd y_train, y_test;
  std::vector<int> discrete_columns;
  std::vector<bool> causal_mask;
};

/// y ~ N(f0(x), noise_variance); rbf/matern32 outcomes come from one joint
/// draw over the union of train and test points.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

double f0_linear(const Eigen::Ref<const VectorXd>& x5);
double f0_complex(const Eigen::Ref<const VectorXd>& x5);

/// One joint multivariate-normal draw of a kernel GP at the given points
/// (rows). rbf: exp(-r^2/(2 l^2)); matern32: (1 + sqrt(3) r/l) exp(-sqrt(3) r/l).
VectorXd sample_gp_outcome(OutcomeKind kernel, const Eigen::Ref<const MatrixXd>& points,
                           double lengthscale, std::mt19937_64& rng);

double rbf_kernel(double r, double lengthscale);
double matern32_kernel(double r, double lengthscale);

/// Rank-based AUROC with midrank tie handling: the probability that a random
/// causal variable outscores a random non-causal one, ties counting half.
double auroc(const Eigen::Ref<const VectorXd>& scores, const std::vector<bool>& causal_mask);

}  // namespace psivar

#endif  // PSIVAR_SYNTHETIC_HPP
