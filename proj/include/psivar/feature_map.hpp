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
#ifndef PSIVAR_FEATURE_MAP_HPP
#define PSIVAR_FEATURE_MAP_HPP

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "psivar/common.hpp"

namespace psivar {

/// Basis expansion phi: R^d -> R^D with closed-form per-variable partial
/// derivatives for continuous variables and level contrasts for discrete
/// ones. Implementations are immutable after construction; evaluation and
/// differentiation are pure and safe to call concurrently.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  const std::vector<ColumnSpec>& column_roles() const { return roles_; }

  VectorXd evaluate(const Eigen::Ref<const VectorXd>& x) const;

  /// d(phi)/d(x_j). Defined for continuous-role variables only.
  VectorXd partial(const Eigen::Ref<const VectorXd>& x, int variable) const;

  /// phi(x with x_j = level_a) - phi(x with x_j = level_b), the discrete
  /// analogue of a partial derivative. Levels must belong to the declared
  /// level set of variable j.
  virtual VectorXd contrast(const Eigen::Ref<const VectorXd>& x, int variable, double level_a,
                            double level_b) const;

  /// Row-wise evaluation, n x D.
  MatrixXd evaluate_batch(const Eigen::Ref<const MatrixXd>& x) const;

  /// Row-wise partials, n x D.
  MatrixXd partial_batch(const Eigen::Ref<const MatrixXd>& x, int variable) const;

  /// All per-variable partials at one point, d x D; rows of discrete
  /// variables are zero. Overridable where the per-variable work shares a
  /// common precomputation.
  virtual MatrixXd partials_all(const Eigen::Ref<const VectorXd>& x) const;

  virtual bool differentiable() const { return true; }
  virtual const char* kind() const = 0;

 protected:
  FeatureMap(int input_dim, int output_dim, std::vector<ColumnSpec> roles);

  virtual void eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const = 0;
  virtual void partial_into(const Eigen::Ref<const VectorXd>& x, int variable,
                            VectorXd& out) const = 0;

  void check_input(const Eigen::Ref<const VectorXd>& x) const;
  void check_variable(int variable) const;

  std::vector<ColumnSpec> roles_;

 private:
  int input_dim_ = 0;
  int output_dim_ = 0;
};

/// phi(x) = sqrt(2/D) * cos(W^T x / lengthscale + b) with W_ij ~ N(0,1) and
/// b_k ~ Unif(0, 2pi). Inner products converge to the RBF kernel
/// exp(-|x-x'|^2 / (2 lengthscale^2)) as D grows.
class RandomFourierMap final : public FeatureMap {
 public:
  RandomFourierMap(int input_dim, int n_features, double lengthscale, std::uint64_t seed,
                   std::vector<ColumnSpec> roles = {});

  /// Reconstruction from stored weights (deserialization).
  RandomFourierMap(MatrixXd weights, VectorXd phases, double lengthscale, std::uint64_t seed,
                   std::vector<ColumnSpec> roles);

  const MatrixXd& weights() const { return weights_; }
  const VectorXd& phases() const { return phases_; }
  double lengthscale() const { return lengthscale_; }
  std::uint64_t seed() const { return seed_; }

  const char* kind() const override { return "random_fourier"; }

  MatrixXd partials_all(const Eigen::Ref<const VectorXd>& x) const override;

 protected:
  void eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const override;
  void partial_into(const Eigen::Ref<const VectorXd>& x, int variable,
                    VectorXd& out) const override;

 private:
  MatrixXd weights_;  // d x D
  VectorXd phases_;   // D
  double lengthscale_ = 1.0;
  std::uint64_t seed_ = 0;
};

struct SplitCondition {
  int feature = 0;
  double threshold = 0.0;
  bool greater = false;  // true: x_feature > threshold; false: x_feature <= threshold

  bool satisfied(double value) const { return greater ? value > threshold : value <= threshold; }
};

/// Conjunction of split conditions along one root-to-leaf path. An empty rule
/// is the whole space (single-leaf tree).
using LeafRule = std::vector<SplitCondition>;

enum class TreeEvalMode { kHard, kSoft };

/// One-hot leaf-membership expansion of a decision tree. Hard mode emits the
/// exact indicator vector; soft mode replaces each indicator with a product
/// of sigmoids 1/(1+exp(-c(x-a))) so the map becomes differentiable. The
/// smoothness c is role-dependent: c_continuous for continuous split
/// variables, c_discrete for discrete ones.
class SoftTreeMap final : public FeatureMap {
 public:
  SoftTreeMap(std::vector<LeafRule> leaves, std::vector<ColumnSpec> roles,
              TreeEvalMode mode = TreeEvalMode::kSoft, double c_continuous = 1.0,
              double c_discrete = 0.1);

  const std::vector<LeafRule>& leaves() const { return leaves_; }
  TreeEvalMode mode() const { return mode_; }
  double c_continuous() const { return c_continuous_; }
  double c_discrete() const { return c_discrete_; }

  /// Index of the unique leaf cell containing x.
  int hard_leaf_index(const Eigen::Ref<const VectorXd>& x) const;

  /// One-pass soft derivatives for every continuous variable at once:
  /// out[j] receives (leaf index, d phi_leaf / d x_j) pairs for each variable
  /// j that appears on some leaf path. out must be sized input_dim; touched
  /// entries are cleared and refilled.
  void sparse_partials(const Eigen::Ref<const VectorXd>& x,
                       std::vector<std::vector<std::pair<int, double>>>& out) const;

  /// Same tree, different evaluation mode.
  std::shared_ptr<SoftTreeMap> with_mode(TreeEvalMode mode) const;

  bool differentiable() const override { return mode_ == TreeEvalMode::kSoft; }
  const char* kind() const override { return "soft_tree"; }

 protected:
  void eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const override;
  void partial_into(const Eigen::Ref<const VectorXd>& x, int variable,
                    VectorXd& out) const override;

 private:
  double smoothness(int feature) const;
  void soft_eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const;

  std::vector<LeafRule> leaves_;
  TreeEvalMode mode_;
  double c_continuous_;
  double c_discrete_;
};

/// Clamped cubic B-spline basis on one variable; knots at empirical
/// quantiles of the fitting sample.
class BSplineBasis {
 public:
  static constexpr int kDegree = 3;

  /// Builds the clamped knot vector from observed values; interior knots sit
  /// at empirical quantiles.
  static BSplineBasis from_data(const Eigen::Ref<const VectorXd>& values, int interior_knots);

  explicit BSplineBasis(VectorXd knots);

  int size() const { return static_cast<int>(knots_.size()) - kDegree - 1; }
  const VectorXd& knots() const { return knots_; }

  void eval_into(double x, Eigen::Ref<VectorXd> out) const;
  void deriv_into(double x, Eigen::Ref<VectorXd> out) const;

 private:
  int find_span(double x) const;

  VectorXd knots_;  // full clamped knot vector, non-decreasing
};

/// Additive expansion: one intercept feature plus a per-variable block.
/// Continuous variables get a cubic B-spline block; discrete variables get a
/// single identity feature. partial(x, j) is nonzero only inside block j.
class AdditiveBasisMap final : public FeatureMap {
 public:
  AdditiveBasisMap(std::vector<BSplineBasis> bases, std::vector<ColumnSpec> roles,
                   std::optional<VectorXd> prior_center = std::nullopt);

  /// Knot placement from the observed per-column ranges of x.
  static std::shared_ptr<AdditiveBasisMap> fit(const Eigen::Ref<const MatrixXd>& x,
                                               std::vector<ColumnSpec> roles,
                                               int interior_knots = 10);

  const std::vector<BSplineBasis>& bases() const { return bases_; }
  const std::optional<VectorXd>& prior_center() const { return prior_center_; }
  void set_prior_center(VectorXd center);

  /// [start, size) of the feature block belonging to one variable.
  std::pair<int, int> block(int variable) const;

  const char* kind() const override { return "additive_basis"; }

 protected:
  void eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const override;
  void partial_into(const Eigen::Ref<const VectorXd>& x, int variable,
                    VectorXd& out) const override;

 private:
  static int count_features(const std::vector<BSplineBasis>& bases,
                            const std::vector<ColumnSpec>& roles);

  std::vector<BSplineBasis> bases_;  // bases_[j] unused when column j is discrete
  std::vector<int> offsets_;
  std::optional<VectorXd> prior_center_;
};

/// Weighted concatenation [a_1 phi_1(x); ...; a_M phi_M(x)], the feature map
/// of a fixed-weight mixture of the member processes.
class ConcatenatedMap final : public FeatureMap {
 public:
  using Member = std::pair<double, std::shared_ptr<const FeatureMap>>;

  explicit ConcatenatedMap(std::vector<Member> members);

  /// Uniform weights 1/M.
  static std::shared_ptr<ConcatenatedMap> uniform(
      std::vector<std::shared_ptr<const FeatureMap>> maps);

  const std::vector<Member>& members() const { return members_; }

  /// Delegates to each member so mode-specific contrast rules apply.
  VectorXd contrast(const Eigen::Ref<const VectorXd>& x, int variable, double level_a,
                    double level_b) const override;

  bool differentiable() const override;
  const char* kind() const override { return "concatenated"; }

 protected:
  void eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const override;
  void partial_into(const Eigen::Ref<const VectorXd>& x, int variable,
                    VectorXd& out) const override;

 private:
  static int total_dim(const std::vector<Member>& members);

  std::vector<Member> members_;
};

}  // namespace psivar

#endif  // PSIVAR_FEATURE_MAP_HPP
