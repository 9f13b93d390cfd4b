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
#ifndef PSIVAR_IMPORTANCE_HPP
#define PSIVAR_IMPORTANCE_HPP

#include <string>
#include <vector>

#include "psivar/common.hpp"
#include "psivar/feature_map.hpp"
#include "psivar/posterior.hpp"

namespace psivar {

enum class GramKind { kDerivative, kContrast };

/// Accumulated D x D matrix G_j = sum_i g(x_i) g(x_i)^T where g is the
/// feature-map partial derivative with respect to variable j (continuous) or
/// the pairwise level contrasts (discrete). Makes psi_j = beta^T G_j beta / n
/// a quadratic form in the weights.
class DerivativeGram {
 public:
  DerivativeGram(int dim, int variable, GramKind kind);

  /// Adds one batch of rows. Derivative kind requires a continuous role and a
  /// differentiable map; contrast kind requires a discrete role and uses all
  /// pairwise level contrasts declared for the variable.
  void accumulate(const FeatureMap& map, const Eigen::Ref<const MatrixXd>& x);

  /// Low-level: G += g g^T, n unchanged. Callers manage sample_count via
  /// add_samples.
  void add_outer(const Eigen::Ref<const VectorXd>& g);
  void add_samples(long n) { count_ += n; }

  void merge(const DerivativeGram& other);

  const MatrixXd& matrix() const { return gram_; }
  long sample_count() const { return count_; }
  int variable() const { return variable_; }
  GramKind kind() const { return kind_; }

 private:
  MatrixXd gram_;
  long count_ = 0;
  int variable_;
  GramKind kind_;
};

/// beta^T G beta / n for a fixed weight vector.
double psi_point(const Eigen::Ref<const VectorXd>& beta, const DerivativeGram& gram);

/// Monte Carlo draws psi^(s) = beta^(s)T G beta^(s) / n with beta^(s) from
/// the weight posterior. All entries are nonnegative.
VectorXd psi_samples(const WeightPosterior& posterior, const DerivativeGram& gram, int k,
                     std::mt19937_64& rng);

/// Exact posterior mean (E[beta]^T G E[beta] + tr(G Cov[beta])) / n.
double psi_mean_exact(const WeightPosterior& posterior, const DerivativeGram& gram);

struct PsiMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact Gaussian quadratic-form moments:
///   mean = (m^T G m + tr(G C)) / n
///   var  = (2 tr((G C)^2) + 4 m^T G C G m) / n^2
PsiMoments psi_moments_exact(const WeightPosterior& posterior, const DerivativeGram& gram);

/// Spectral (noncentral chi-squared mixture) moments built from the
/// eigendecomposition of G. Exact only when Cov[beta] and G commute; kept as
/// a diagnostic for that case.
PsiMoments psi_moments_spectral(const WeightPosterior& posterior, const DerivativeGram& gram);

/// Empirical exceedance P(psi > s) on an ascending grid; non-increasing.
std::vector<std::pair<double, double>> survival_curve(const Eigen::Ref<const VectorXd>& samples,
                                                      const std::vector<double>& grid);

struct VariableImportance {
  int variable = 0;
  double mean = 0.0;      // exact posterior mean
  double variance = 0.0;  // exact posterior variance
  double sd = 0.0;
  double q05 = 0.0, q50 = 0.0, q95 = 0.0;  // empirical Monte Carlo quantiles
  int rank = 0;                            // 1 = largest exact mean
  double normalized_mean = 0.0;            // mean / max mean
  VectorXd samples;
};

struct ImportanceSummary {
  std::vector<VariableImportance> variables;
  std::vector<double> survival_grid;
  MatrixXd survival;  // variables x grid
};

struct SummarizeOptions {
  int mc_samples = 1000;
  int grid_size = 200;
  bool keep_samples = true;
};

/// Per-variable posterior summaries from one shared posterior and one gram
/// per variable. Survival curves share a grid spanning 0 to the pooled 99.5%
/// sample quantile; means are additionally normalized by their maximum.
ImportanceSummary summarize(const WeightPosterior& posterior,
                            const std::vector<DerivativeGram>& grams, std::mt19937_64& rng,
                            const SummarizeOptions& options = {});

/// Ranks by descending exact mean (ties toward the lower variable index) and
/// normalizes means by their maximum.
void assign_ranks(std::vector<VariableImportance>& variables);

/// Shared survival grid over the pooled samples plus per-variable quantiles;
/// optionally drops the raw samples afterwards.
void build_survival(ImportanceSummary& summary, int grid_size, bool keep_samples);

/// Linear-interpolation empirical quantile of an unsorted sample vector.
double empirical_quantile(VectorXd samples, double q);

}  // namespace psivar

#endif  // PSIVAR_IMPORTANCE_HPP
