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
#ifndef PSIVAR_POSTERIOR_HPP
#define PSIVAR_POSTERIOR_HPP

#include <optional>

#include "psivar/common.hpp"

namespace psivar {

/// Gaussian posterior over basis weights: beta ~ N(mean, cov).
struct WeightPosterior {
  VectorXd mean;
  MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }

  /// K i.i.d. draws (rows) via a symmetric factorization of cov. Falls back
  /// to an eigenvalue square root when the covariance is only semidefinite.
  MatrixXd sample(int k, std::mt19937_64& rng) const;
};

enum class AccumulatorMode { kPrecision, kWoodbury };

/// Streaming conjugate posterior for the Bayesian linear model
/// y = Phi beta + e, beta ~ N(mu, I), e ~ N(0, sigma^2 I).
///
/// Precision mode accumulates S = I + Phi^T Phi / sigma^2 and inverts once at
/// finalize; Woodbury mode maintains the running covariance directly with a
/// rank-n_m downdate per batch. Both accumulate P = Phi^T (y - Phi mu) / sigma^2
/// and yield mean = mu + cov P, cov = (Phi^T Phi / sigma^2 + I)^{-1}.
class PosteriorAccumulator {
 public:
  PosteriorAccumulator(int dim, double noise_variance,
                       AccumulatorMode mode = AccumulatorMode::kPrecision,
                       VectorXd prior_mean = VectorXd());

  void accumulate(const Eigen::Ref<const MatrixXd>& phi, const Eigen::Ref<const VectorXd>& y);

  /// Entrywise combination of two precision-mode accumulators; associative
  /// and commutative, so shards may be merged in any order.
  void merge(const PosteriorAccumulator& other);

  WeightPosterior finalize() const;

  /// Log marginal likelihood log p(y | sigma^2) of everything accumulated so
  /// far (precision mode only).
  double log_evidence() const;

  int dim() const { return dim_; }
  long sample_count() const { return count_; }
  double noise_variance() const { return sigma2_; }
  AccumulatorMode mode() const { return mode_; }
  const VectorXd& prior_mean() const { return mu_; }
  const MatrixXd& state_matrix() const { return state_; }

 private:
  AccumulatorMode mode_;
  int dim_;
  double sigma2_;
  VectorXd mu_;
  VectorXd p_;      // Phi^T (y - Phi mu) / sigma^2
  MatrixXd state_;  // precision: S (init I); woodbury: Sigma (init I)
  double rss_ = 0.0;  // (y - Phi mu)^T (y - Phi mu), for the evidence
  long count_ = 0;
};

struct GpPrediction {
  VectorXd mean;
  MatrixXd cov;
};

/// Predictive distribution of f* = Phi* beta.
GpPrediction predict(const WeightPosterior& posterior, const Eigen::Ref<const MatrixXd>& phi_star);

/// Kernel-form GP regression posterior:
///   mean = m* + K*(K + sigma^2 I)^{-1}(y - m)
///   cov  = K** - K*(K + sigma^2 I)^{-1} K*^T
/// Used as the small-n oracle for the feature-space computation.
GpPrediction dual_gp_posterior(const Eigen::Ref<const MatrixXd>& k_train,
                               const Eigen::Ref<const MatrixXd>& k_cross,
                               const Eigen::Ref<const MatrixXd>& k_test,
                               const Eigen::Ref<const VectorXd>& y, double noise_variance,
                               std::optional<VectorXd> prior_mean_train = std::nullopt,
                               std::optional<VectorXd> prior_mean_test = std::nullopt);

/// One-pass residual estimate: fit with unit noise, return the mean squared
/// residual at the posterior mean, floored at 1e-8. Used only when the
/// configuration does not pin sigma^2.
double estimate_noise_variance(const Eigen::Ref<const MatrixXd>& phi,
                               const Eigen::Ref<const VectorXd>& y);

/// Cholesky with the escalating-jitter policy: on failure add
/// 1e-10 * trace(A)/dim to the diagonal, doubling up to six times; after that
/// throws NumericalError carrying the smallest-eigenvalue estimate.
Eigen::LLT<MatrixXd> cholesky_with_jitter(const MatrixXd& matrix);

}  // namespace psivar

#endif  // PSIVAR_POSTERIOR_HPP
