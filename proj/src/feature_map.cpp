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
#include "psivar/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace psivar {

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

bool level_declared(const ColumnSpec& spec, double level) {
  return std::find(spec.levels.begin(), spec.levels.end(), level) != spec.levels.end();
}

}  // namespace

FeatureMap::FeatureMap(int input_dim, int output_dim, std::vector<ColumnSpec> roles)
    : roles_(std::move(roles)), input_dim_(input_dim), output_dim_(output_dim) {
  if (input_dim_ == 0) input_dim_ = static_cast<int>(roles_.size());
  require(input_dim_ > 0, "feature map input dimension must be positive");
  require(output_dim_ > 0, "feature map output dimension must be positive");
  if (roles_.empty()) roles_ = continuous_roles(input_dim_);
  require(static_cast<int>(roles_.size()) == input_dim_,
          "column role count must match input dimension");
  for (auto& spec : roles_) {
    if (spec.role == ColumnRole::kBinary && spec.levels.empty()) spec.levels = {0.0, 1.0};
    if (spec.role == ColumnRole::kCategorical) {
      if (spec.levels.empty()) throw DataError("categorical column must declare its levels");
      auto sorted = spec.levels;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw DataError("categorical level list contains duplicates");
    }
  }
}

void FeatureMap::check_input(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != input_dim_)
    throw DimensionError("input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(input_dim_));
}

void FeatureMap::check_variable(int variable) const {
  if (variable < 0 || variable >= input_dim_)
    throw DimensionError("variable index " + std::to_string(variable) + " out of range");
}

VectorXd FeatureMap::evaluate(const Eigen::Ref<const VectorXd>& x) const {
  check_input(x);
  VectorXd out(output_dim_);
  eval_into(x, out);
  return out;
}

VectorXd FeatureMap::partial(const Eigen::Ref<const VectorXd>& x, int variable) const {
  check_input(x);
  check_variable(variable);
  if (roles_[variable].discrete())
    throw DimensionError("partial derivative requested for discrete variable " +
                         std::to_string(variable) + "; use contrast instead");
  if (!differentiable())
    throw DimensionError("feature map is not differentiable in its current mode");
  VectorXd out(output_dim_);
  partial_into(x, variable, out);
  return out;
}

VectorXd FeatureMap::contrast(const Eigen::Ref<const VectorXd>& x, int variable, double level_a,
                              double level_b) const {
  check_input(x);
  check_variable(variable);
  const ColumnSpec& spec = roles_[variable];
  if (!spec.discrete())
    throw DimensionError("contrast requested for continuous variable " +
                         std::to_string(variable));
  if (!level_declared(spec, level_a) || !level_declared(spec, level_b))
    throw DataError("contrast level not in the declared category set of variable " +
                    std::to_string(variable));
  if (level_a == level_b) throw DataError("contrast levels must differ");
  VectorXd xa = x;
  VectorXd xb = x;
  xa[variable] = level_a;
  xb[variable] = level_b;
  return evaluate(xa) - evaluate(xb);
}

MatrixXd FeatureMap::evaluate_batch(const Eigen::Ref<const MatrixXd>& x) const {
  require(static_cast<int>(x.cols()) == input_dim_, "batch column count must equal input_dim");
  MatrixXd out(x.rows(), output_dim_);
  VectorXd row(output_dim_);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    VectorXd xi = x.row(i);
    eval_into(xi, row);
    out.row(i) = row;
  }
  return out;
}

MatrixXd FeatureMap::partial_batch(const Eigen::Ref<const MatrixXd>& x, int variable) const {
  require(static_cast<int>(x.cols()) == input_dim_, "batch column count must equal input_dim");
  check_variable(variable);
  MatrixXd out(x.rows(), output_dim_);
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = partial(x.row(i), variable);
  return out;
}

MatrixXd FeatureMap::partials_all(const Eigen::Ref<const VectorXd>& x) const {
  check_input(x);
  MatrixXd out = MatrixXd::Zero(input_dim_, output_dim_);
  VectorXd row(output_dim_);
  for (int j = 0; j < input_dim_; ++j) {
    if (roles_[j].discrete()) continue;
    partial_into(x, j, row);
    out.row(j) = row;
  }
  return out;
}

// ---------------------------------------------------------------------------
// RandomFourierMap

RandomFourierMap::RandomFourierMap(int input_dim, int n_features, double lengthscale,
                                   std::uint64_t seed, std::vector<ColumnSpec> roles)
    : FeatureMap(input_dim, n_features, std::move(roles)),
      lengthscale_(lengthscale),
      seed_(seed) {
  require(lengthscale_ > 0.0, "lengthscale must be positive");
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  weights_.resize(input_dim, n_features);
  phases_.resize(n_features);
  for (int k = 0; k < n_features; ++k) {
    for (int j = 0; j < input_dim; ++j) weights_(j, k) = gauss(rng);
    phases_[k] = uniform(rng);
  }
}

RandomFourierMap::RandomFourierMap(MatrixXd weights, VectorXd phases, double lengthscale,
                                   std::uint64_t seed, std::vector<ColumnSpec> roles)
    : FeatureMap(static_cast<int>(weights.rows()), static_cast<int>(weights.cols()),
                 std::move(roles)),
      weights_(std::move(weights)),
      phases_(std::move(phases)),
      lengthscale_(lengthscale),
      seed_(seed) {
  require(lengthscale_ > 0.0, "lengthscale must be positive");
  require(phases_.size() == weights_.cols(), "phase count must equal feature count");
}

void RandomFourierMap::eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const {
  const double scale = std::sqrt(2.0 / output_dim());
  out = (((weights_.transpose() * x) / lengthscale_) + phases_).array().cos() * scale;
}

void RandomFourierMap::partial_into(const Eigen::Ref<const VectorXd>& x, int variable,
                                    VectorXd& out) const {
  const double scale = std::sqrt(2.0 / output_dim());
  VectorXd arg = ((weights_.transpose() * x) / lengthscale_) + phases_;
  out = -scale / lengthscale_ *
        (weights_.row(variable).transpose().array() * arg.array().sin()).matrix();
}

MatrixXd RandomFourierMap::partials_all(const Eigen::Ref<const VectorXd>& x) const {
  check_input(x);
  const double scale = std::sqrt(2.0 / output_dim());
  const VectorXd arg = ((weights_.transpose() * x) / lengthscale_) + phases_;
  const VectorXd sins = arg.array().sin();
  MatrixXd out = (-scale / lengthscale_) *
                 (weights_.array().rowwise() * sins.transpose().array()).matrix();
  for (int j = 0; j < input_dim(); ++j)
    if (roles_[j].discrete()) out.row(j).setZero();
  return out;
}

// ---------------------------------------------------------------------------
// SoftTreeMap

SoftTreeMap::SoftTreeMap(std::vector<LeafRule> leaves, std::vector<ColumnSpec> roles,
                         TreeEvalMode mode, double c_continuous, double c_discrete)
    : FeatureMap(0, static_cast<int>(leaves.size()), std::move(roles)),
      leaves_(std::move(leaves)),
      mode_(mode),
      c_continuous_(c_continuous),
      c_discrete_(c_discrete) {
  require(!leaves_.empty(), "tree map needs at least one leaf");
  require(c_continuous_ > 0.0 && c_discrete_ > 0.0, "sigmoid smoothness must be positive");
  for (const auto& rule : leaves_)
    for (const auto& cond : rule)
      require(cond.feature >= 0 && cond.feature < input_dim(),
              "leaf rule references an out-of-range feature");
}

double SoftTreeMap::smoothness(int feature) const {
  return roles_[feature].discrete() ? c_discrete_ : c_continuous_;
}

int SoftTreeMap::hard_leaf_index(const Eigen::Ref<const VectorXd>& x) const {
  check_input(x);
  for (std::size_t k = 0; k < leaves_.size(); ++k) {
    bool inside = true;
    for (const auto& cond : leaves_[k]) {
      if (!cond.satisfied(x[cond.feature])) {
        inside = false;
        break;
      }
    }
    if (inside) return static_cast<int>(k);
  }
  throw DataError("leaf rules do not cover the query point; tree partition is inconsistent");
}

void SoftTreeMap::soft_eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const {
  for (std::size_t k = 0; k < leaves_.size(); ++k) {
    double value = 1.0;
    for (const auto& cond : leaves_[k]) {
      const double s = sigmoid(smoothness(cond.feature) * (x[cond.feature] - cond.threshold));
      value *= cond.greater ? s : 1.0 - s;
    }
    out[static_cast<Eigen::Index>(k)] = value;
  }
}

void SoftTreeMap::eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const {
  if (mode_ == TreeEvalMode::kHard) {
    out.setZero();
    out[hard_leaf_index(x)] = 1.0;
  } else {
    soft_eval_into(x, out);
  }
}

void SoftTreeMap::partial_into(const Eigen::Ref<const VectorXd>& x, int variable,
                               VectorXd& out) const {
  // Product rule over the path sigmoids of each leaf; only conditions on
  // `variable` contribute.
  out.setZero();
  for (std::size_t k = 0; k < leaves_.size(); ++k) {
    const LeafRule& rule = leaves_[k];
    const std::size_t m = rule.size();
    if (m == 0) continue;
    // factors[l] and their prefix/suffix products, so the product excluding
    // one factor never divides by a near-zero sigmoid tail.
    std::vector<double> factor(m), dfactor(m);
    bool touches = false;
    for (std::size_t l = 0; l < m; ++l) {
      const auto& cond = rule[l];
      const double c = smoothness(cond.feature);
      const double s = sigmoid(c * (x[cond.feature] - cond.threshold));
      factor[l] = cond.greater ? s : 1.0 - s;
      const double ds = c * s * (1.0 - s);
      dfactor[l] = cond.greater ? ds : -ds;
      touches = touches || cond.feature == variable;
    }
    if (!touches) continue;
    std::vector<double> prefix(m + 1, 1.0), suffix(m + 1, 1.0);
    for (std::size_t l = 0; l < m; ++l) prefix[l + 1] = prefix[l] * factor[l];
    for (std::size_t l = m; l-- > 0;) suffix[l] = suffix[l + 1] * factor[l];
    double grad = 0.0;
    for (std::size_t l = 0; l < m; ++l)
      if (rule[l].feature == variable) grad += dfactor[l] * prefix[l] * suffix[l + 1];
    out[static_cast<Eigen::Index>(k)] = grad;
  }
}

void SoftTreeMap::sparse_partials(
    const Eigen::Ref<const VectorXd>& x,
    std::vector<std::vector<std::pair<int, double>>>& out) const {
  check_input(x);
  require(mode_ == TreeEvalMode::kSoft, "sparse partials require soft evaluation mode");
  require(out.size() == static_cast<std::size_t>(input_dim()), "output must be sized input_dim");
  for (auto& list : out) list.clear();
  std::vector<double> factor, dfactor, prefix, suffix;
  for (std::size_t k = 0; k < leaves_.size(); ++k) {
    const LeafRule& rule = leaves_[k];
    const std::size_t m = rule.size();
    if (m == 0) continue;
    factor.resize(m);
    dfactor.resize(m);
    for (std::size_t l = 0; l < m; ++l) {
      const auto& cond = rule[l];
      const double c = smoothness(cond.feature);
      const double s = sigmoid(c * (x[cond.feature] - cond.threshold));
      factor[l] = cond.greater ? s : 1.0 - s;
      const double ds = c * s * (1.0 - s);
      dfactor[l] = cond.greater ? ds : -ds;
    }
    prefix.assign(m + 1, 1.0);
    suffix.assign(m + 1, 1.0);
    for (std::size_t l = 0; l < m; ++l) prefix[l + 1] = prefix[l] * factor[l];
    for (std::size_t l = m; l-- > 0;) suffix[l] = suffix[l + 1] * factor[l];
    for (std::size_t l = 0; l < m; ++l) {
      const int j = rule[l].feature;
      if (roles_[j].discrete()) continue;  // contrasts handle discrete variables
      const double grad = dfactor[l] * prefix[l] * suffix[l + 1];
      auto& list = out[j];
      if (!list.empty() && list.back().first == static_cast<int>(k))
        list.back().second += grad;  // repeated splits on j along one path
      else
        list.emplace_back(static_cast<int>(k), grad);
    }
  }
}

std::shared_ptr<SoftTreeMap> SoftTreeMap::with_mode(TreeEvalMode mode) const {
  return std::make_shared<SoftTreeMap>(leaves_, roles_, mode, c_continuous_, c_discrete_);
}

// ---------------------------------------------------------------------------
// BSplineBasis

BSplineBasis::BSplineBasis(VectorXd knots) : knots_(std::move(knots)) {
  require(knots_.size() >= 2 * (kDegree + 1), "knot vector too short for cubic splines");
  for (Eigen::Index i = 1; i < knots_.size(); ++i)
    require(knots_[i] >= knots_[i - 1], "knot vector must be non-decreasing");
}

BSplineBasis BSplineBasis::from_data(const Eigen::Ref<const VectorXd>& values,
                                     int interior_knots) {
  require(values.size() >= 2, "need at least two observations to place knots");
  require(interior_knots >= 0, "interior knot count must be nonnegative");
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  double lo = sorted.front();
  double hi = sorted.back();
  if (hi <= lo) hi = lo + 1.0;  // degenerate column; keep the basis well defined
  const int total = 2 * (kDegree + 1) + interior_knots;
  VectorXd knots(total);
  for (int i = 0; i <= kDegree; ++i) {
    knots[i] = lo;
    knots[total - 1 - i] = hi;
  }
  for (int k = 1; k <= interior_knots; ++k) {
    const double q = static_cast<double>(k) / (interior_knots + 1);
    const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
    const auto idx = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(idx);
    double value = sorted[idx];
    if (idx + 1 < sorted.size()) value += frac * (sorted[idx + 1] - sorted[idx]);
    value = std::clamp(value, lo, hi);
    knots[kDegree + k] = value;
  }
  // Quantile knots may coincide on heavily tied data; keep them sorted.
  std::sort(knots.data(), knots.data() + total);
  return BSplineBasis(knots);
}

int BSplineBasis::find_span(double x) const {
  const int n = size();
  // valid spans run from kDegree to n-1 in knot index space
  if (x >= knots_[n]) return n - 1;
  if (x <= knots_[kDegree]) return kDegree;
  int lo = kDegree, hi = n;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (x < knots_[mid])
      hi = mid;
    else
      lo = mid;
  }
  return lo;
}

void BSplineBasis::eval_into(double x, Eigen::Ref<VectorXd> out) const {
  out.setZero();
  const double lo = knots_[kDegree];
  const double hi = knots_[size()];
  x = std::clamp(x, lo, hi);
  const int span = find_span(x);
  // Cox-de Boor on the nonzero window [span-degree, span].
  double left[kDegree + 1], right[kDegree + 1], basis[kDegree + 1];
  basis[0] = 1.0;
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom > 0.0 ? basis[r] / denom : 0.0;
      basis[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    basis[j] = saved;
  }
  for (int r = 0; r <= kDegree; ++r) out[span - kDegree + r] = basis[r];
}

void BSplineBasis::deriv_into(double x, Eigen::Ref<VectorXd> out) const {
  out.setZero();
  const double lo = knots_[kDegree];
  const double hi = knots_[size()];
  if (x < lo || x > hi) return;  // constant (clamped) outside the range
  const int span = find_span(x);
  // One-degree-lower basis, then the standard derivative difference formula.
  constexpr int p = kDegree;
  double left[p + 1], right[p + 1], lower[p + 1];
  lower[0] = 1.0;
  for (int j = 1; j <= p - 1; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom > 0.0 ? lower[r] / denom : 0.0;
      lower[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    lower[j] = saved;
  }
  // lower[r] = B_{span-p+1+r, p-1}(x) for r = 0..p-1
  for (int r = 0; r <= p; ++r) {
    const int i = span - p + r;
    double value = 0.0;
    if (r > 0) {
      const double denom = knots_[i + p] - knots_[i];
      if (denom > 0.0) value += p * lower[r - 1] / denom;
    }
    if (r < p) {
      const double denom = knots_[i + p + 1] - knots_[i + 1];
      if (denom > 0.0) value -= p * lower[r] / denom;
    }
    out[i] = value;
  }
}

// ---------------------------------------------------------------------------
// AdditiveBasisMap

int AdditiveBasisMap::count_features(const std::vector<BSplineBasis>& bases,
                                     const std::vector<ColumnSpec>& roles) {
  int total = 1;  // intercept
  for (std::size_t j = 0; j < roles.size(); ++j)
    total += roles[j].discrete() ? 1 : bases[j].size();
  return total;
}

AdditiveBasisMap::AdditiveBasisMap(std::vector<BSplineBasis> bases, std::vector<ColumnSpec> roles,
                                   std::optional<VectorXd> prior_center)
    : FeatureMap(static_cast<int>(roles.size()), count_features(bases, roles), roles),
      bases_(std::move(bases)),
      prior_center_(std::move(prior_center)) {
  require(bases_.size() == static_cast<std::size_t>(input_dim()),
          "one basis definition per input variable required");
  offsets_.resize(input_dim());
  int offset = 1;
  for (int j = 0; j < input_dim(); ++j) {
    offsets_[j] = offset;
    offset += roles_[j].discrete() ? 1 : bases_[j].size();
  }
  if (prior_center_)
    require(prior_center_->size() == output_dim(),
            "prior center length must equal output dimension");
}

std::shared_ptr<AdditiveBasisMap> AdditiveBasisMap::fit(const Eigen::Ref<const MatrixXd>& x,
                                                        std::vector<ColumnSpec> roles,
                                                        int interior_knots) {
  require(x.rows() >= 2, "need at least two rows to fit an additive basis");
  if (roles.empty()) roles = continuous_roles(static_cast<int>(x.cols()));
  require(static_cast<int>(roles.size()) == x.cols(), "one role per column required");
  std::vector<BSplineBasis> bases;
  bases.reserve(roles.size());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    bases.push_back(BSplineBasis::from_data(x.col(j), interior_knots));
  return std::make_shared<AdditiveBasisMap>(std::move(bases), std::move(roles));
}

void AdditiveBasisMap::set_prior_center(VectorXd center) {
  require(center.size() == output_dim(), "prior center length must equal output dimension");
  prior_center_ = std::move(center);
}

std::pair<int, int> AdditiveBasisMap::block(int variable) const {
  check_variable(variable);
  const int size = roles_[variable].discrete() ? 1 : bases_[variable].size();
  return {offsets_[variable], size};
}

void AdditiveBasisMap::eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const {
  out[0] = 1.0;
  for (int j = 0; j < input_dim(); ++j) {
    if (roles_[j].discrete()) {
      out[offsets_[j]] = x[j];
    } else {
      bases_[j].eval_into(x[j], out.segment(offsets_[j], bases_[j].size()));
    }
  }
}

void AdditiveBasisMap::partial_into(const Eigen::Ref<const VectorXd>& x, int variable,
                                    VectorXd& out) const {
  out.setZero();
  bases_[variable].deriv_into(x[variable], out.segment(offsets_[variable],
                                                       bases_[variable].size()));
}

// ---------------------------------------------------------------------------
// ConcatenatedMap

int ConcatenatedMap::total_dim(const std::vector<Member>& members) {
  int total = 0;
  for (const auto& [weight, map] : members) total += map ? map->output_dim() : 0;
  return total;
}

ConcatenatedMap::ConcatenatedMap(std::vector<Member> members)
    : FeatureMap(members.empty() || !members.front().second
                     ? 1
                     : members.front().second->input_dim(),
                 total_dim(members),
                 members.empty() || !members.front().second
                     ? std::vector<ColumnSpec>{}
                     : members.front().second->column_roles()),
      members_(std::move(members)) {
  require(!members_.empty(), "concatenated map needs at least one member");
  for (const auto& [weight, map] : members_) {
    require(map != nullptr, "null member map");
    require(map->input_dim() == input_dim(), "member input dimensions must agree");
  }
}

std::shared_ptr<ConcatenatedMap> ConcatenatedMap::uniform(
    std::vector<std::shared_ptr<const FeatureMap>> maps) {
  std::vector<Member> members;
  members.reserve(maps.size());
  const double weight = maps.empty() ? 1.0 : 1.0 / static_cast<double>(maps.size());
  for (auto& map : maps) members.emplace_back(weight, std::move(map));
  return std::make_shared<ConcatenatedMap>(std::move(members));
}

bool ConcatenatedMap::differentiable() const {
  return std::all_of(members_.begin(), members_.end(),
                     [](const Member& m) { return m.second->differentiable(); });
}

void ConcatenatedMap::eval_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const {
  int offset = 0;
  for (const auto& [weight, map] : members_) {
    out.segment(offset, map->output_dim()) = weight * map->evaluate(x);
    offset += map->output_dim();
  }
}

void ConcatenatedMap::partial_into(const Eigen::Ref<const VectorXd>& x, int variable,
                                   VectorXd& out) const {
  int offset = 0;
  for (const auto& [weight, map] : members_) {
    out.segment(offset, map->output_dim()) = weight * map->partial(x, variable);
    offset += map->output_dim();
  }
}

VectorXd ConcatenatedMap::contrast(const Eigen::Ref<const VectorXd>& x, int variable,
                                   double level_a, double level_b) const {
  check_input(x);
  VectorXd out(output_dim());
  int offset = 0;
  for (const auto& [weight, map] : members_) {
    out.segment(offset, map->output_dim()) =
        weight * map->contrast(x, variable, level_a, level_b);
    offset += map->output_dim();
  }
  return out;
}

}  // namespace psivar
