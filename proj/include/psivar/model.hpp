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
#ifndef PSIVAR_MODEL_HPP
#define PSIVAR_MODEL_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "psivar/common.hpp"
#include "psivar/feature_map.hpp"
#include "psivar/importance.hpp"
#include "psivar/posterior.hpp"
#include "psivar/tree.hpp"

namespace psivar {

/// One mixture component: a weight, the representation the posterior was fit
/// on (hard one-hot for featurized trees), and the differentiable
/// representation used for derivative grams. For non-tree members both views
/// are the same object.
struct ModelMember {
  double weight = 1.0;
  std::shared_ptr<const FeatureMap> fit_map;
  std::shared_ptr<const FeatureMap> grad_map;
  WeightPosterior posterior;
};

/// Fitted featurized-GP model: f(x) = sum_m weight_m phi_m(x)^T beta_m with
/// independent member posteriors. Single-map methods are the M = 1 case.
struct FittedModel {
  std::string method;
  std::vector<ModelMember> members;
  std::vector<ColumnSpec> roles;
  double sigma2 = 1.0;
  std::uint64_t seed = 0;
  double log_evidence = 0.0;
  long n_train = 0;

  int input_dim() const;
  int total_output_dim() const;

  VectorXd predict_mean(const Eigen::Ref<const MatrixXd>& x) const;
  VectorXd predict_variance(const Eigen::Ref<const MatrixXd>& x) const;  // pointwise

  /// Dense predictive distribution (small problems and cross-checks).
  GpPrediction predict_full(const Eigen::Ref<const MatrixXd>& x) const;

  /// The stacked weighted concatenation of the members' gradient maps.
  std::shared_ptr<const ConcatenatedMap> concatenated_grad_map() const;

  /// The same stacking over the representations the posteriors were fit on.
  std::shared_ptr<const ConcatenatedMap> concatenated_fit_map() const;

  /// Block-diagonal stacked posterior over all member weights (dense; small
  /// problems and cross-checks only).
  WeightPosterior stacked_posterior() const;
};

struct FitOptions {
  double noise_variance = 0.0;  // 0: one-pass residual estimate
  int batch_size = 256;
  AccumulatorMode mode = AccumulatorMode::kPrecision;
  int threads = 1;
};

struct FdtOptions {
  int n_trees = 50;
  int max_leaf_nodes = 0;        // 0: ceil(sqrt(n) ln n)
  int candidates_per_split = 0;  // 0: all features
  double c_continuous = 1.0;
  double c_discrete = 0.1;
};

struct RfnnOptions {
  int n_features = 0;  // 0: ceil(sqrt(n) ln n)
  double lengthscale = 10.0;
};

struct AdditiveOptions {
  int interior_knots = 10;
  std::optional<VectorXd> prior_center;
};

/// Forest of extremely randomized trees re-expressed as featurized decision
/// trees: posteriors fit on the hard one-hot leaf features, gradients taken
/// through the sigmoid-smoothed features.
FittedModel fit_fdt_forest(const Eigen::Ref<const MatrixXd>& x,
                           const Eigen::Ref<const VectorXd>& y,
                           const std::vector<ColumnSpec>& roles, const FdtOptions& options,
                           std::uint64_t seed, const FitOptions& fit = {});

/// Random Fourier feature model approximating an RBF-kernel GP.
FittedModel fit_rfnn(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                     const std::vector<ColumnSpec>& roles, const RfnnOptions& options,
                     std::uint64_t seed, const FitOptions& fit = {});

/// Additive B-spline basis model.
FittedModel fit_additive(const Eigen::Ref<const MatrixXd>& x,
                         const Eigen::Ref<const VectorXd>& y,
                         const std::vector<ColumnSpec>& roles, const AdditiveOptions& options,
                         std::uint64_t seed, const FitOptions& fit = {});

/// Uniform mixture of already fitted models: every member keeps its own
/// weight scaled by 1/n_models.
FittedModel combine_models(const std::vector<FittedModel>& models, std::uint64_t seed);

enum class ImportanceMode { kMeans, kMoments, kFull };

struct ModelImportanceOptions {
  ImportanceMode mode = ImportanceMode::kFull;
  int mc_samples = 1000;
  int grid_size = 200;
  bool keep_samples = false;
  long max_rows = 2000;  // row cap for the multi-member covariance path
};

/// Posterior importance of every input variable over the rows of x:
/// derivative quadratic forms for continuous roles, pairwise level contrasts
/// for discrete ones. Single-member models go through the generic gram path;
/// multi-member models use an equivalent per-member block computation.
ImportanceSummary model_importance(const FittedModel& model,
                                   const Eigen::Ref<const MatrixXd>& x,
                                   const ModelImportanceOptions& options, std::mt19937_64& rng);

/// Exact posterior means only (fast path used by the benchmark runner).
VectorXd model_importance_means(const FittedModel& model, const Eigen::Ref<const MatrixXd>& x);

}  // namespace psivar

#endif  // PSIVAR_MODEL_HPP
