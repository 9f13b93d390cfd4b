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
#include "psivar/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace psivar {

namespace {

struct MemberSpec {
  double weight = 1.0;
  std::shared_ptr<const FeatureMap> fit_map;
  std::shared_ptr<const FeatureMap> grad_map;
  VectorXd prior_mean;  // empty: zero
};

void fit_posteriors(FittedModel& model, const std::vector<MemberSpec>& specs,
                    const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                    double sigma2, const FitOptions& fit) {
  model.members.clear();
  model.log_evidence = 0.0;
  const Eigen::Index n = x.rows();
  const Eigen::Index batch = std::max(1, fit.batch_size);
  for (const auto& spec : specs) {
    PosteriorAccumulator acc(spec.fit_map->output_dim(), sigma2, fit.mode, spec.prior_mean);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index size = std::min<Eigen::Index>(batch, n - start);
      acc.accumulate(spec.fit_map->evaluate_batch(x.middleRows(start, size)),
                     y.segment(start, size));
    }
    ModelMember member;
    member.weight = spec.weight;
    member.fit_map = spec.fit_map;
    member.grad_map = spec.grad_map;
    member.posterior = acc.finalize();
    if (fit.mode == AccumulatorMode::kPrecision) model.log_evidence += acc.log_evidence();
    model.members.push_back(std::move(member));
  }
}

FittedModel fit_common(std::string method, const std::vector<MemberSpec>& specs,
                       const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                       const std::vector<ColumnSpec>& roles, std::uint64_t seed,
                       const FitOptions& fit) {
  FittedModel model;
  model.method = std::move(method);
  model.roles = roles.empty() ? continuous_roles(static_cast<int>(x.cols())) : roles;
  model.seed = seed;
  model.n_train = x.rows();
  double sigma2 = fit.noise_variance;
  if (!(sigma2 > 0.0)) {
    fit_posteriors(model, specs, x, y, 1.0, fit);
    const double mse = (y - model.predict_mean(x)).squaredNorm() / static_cast<double>(x.rows());
    sigma2 = std::max(mse, 1e-8);
  }
  fit_posteriors(model, specs, x, y, sigma2, fit);
  model.sigma2 = sigma2;
  return model;
}

int level_pairs(const ColumnSpec& spec) {
  const int k = static_cast<int>(spec.levels.size());
  return k * (k - 1) / 2;
}

}  // namespace

int FittedModel::input_dim() const {
  require(!members.empty(), "model has no members");
  return members.front().fit_map->input_dim();
}

int FittedModel::total_output_dim() const {
  int total = 0;
  for (const auto& member : members) total += member.fit_map->output_dim();
  return total;
}

VectorXd FittedModel::predict_mean(const Eigen::Ref<const MatrixXd>& x) const {
  require(!members.empty(), "model has no members");
  VectorXd out = VectorXd::Zero(x.rows());
  for (const auto& member : members)
    out.noalias() +=
        member.weight * (member.fit_map->evaluate_batch(x) * member.posterior.mean);
  return out;
}

VectorXd FittedModel::predict_variance(const Eigen::Ref<const MatrixXd>& x) const {
  require(!members.empty(), "model has no members");
  VectorXd out = VectorXd::Zero(x.rows());
  for (const auto& member : members) {
    const MatrixXd phi = member.fit_map->evaluate_batch(x);
    const MatrixXd projected = phi * member.posterior.cov;
    out.array() += member.weight * member.weight *
                   (projected.array() * phi.array()).rowwise().sum().max(0.0);
  }
  return out;
}

GpPrediction FittedModel::predict_full(const Eigen::Ref<const MatrixXd>& x) const {
  require(!members.empty(), "model has no members");
  GpPrediction out;
  out.mean = VectorXd::Zero(x.rows());
  out.cov = MatrixXd::Zero(x.rows(), x.rows());
  for (const auto& member : members) {
    const MatrixXd phi = member.fit_map->evaluate_batch(x);
    out.mean.noalias() += member.weight * (phi * member.posterior.mean);
    out.cov.noalias() +=
        member.weight * member.weight * (phi * member.posterior.cov * phi.transpose());
  }
  out.cov = ((out.cov + out.cov.transpose()) * 0.5).eval();
  return out;
}

std::shared_ptr<const ConcatenatedMap> FittedModel::concatenated_grad_map() const {
  std::vector<ConcatenatedMap::Member> parts;
  parts.reserve(members.size());
  for (const auto& member : members) parts.emplace_back(member.weight, member.grad_map);
  return std::make_shared<ConcatenatedMap>(std::move(parts));
}

std::shared_ptr<const ConcatenatedMap> FittedModel::concatenated_fit_map() const {
  std::vector<ConcatenatedMap::Member> parts;
  parts.reserve(members.size());
  for (const auto& member : members) parts.emplace_back(member.weight, member.fit_map);
  return std::make_shared<ConcatenatedMap>(std::move(parts));
}

WeightPosterior FittedModel::stacked_posterior() const {
  const int total = total_output_dim();
  WeightPosterior stacked;
  stacked.mean = VectorXd::Zero(total);
  stacked.cov = MatrixXd::Zero(total, total);
  int at = 0;
  for (const auto& member : members) {
    const int d = member.posterior.dim();
    stacked.mean.segment(at, d) = member.posterior.mean;
    stacked.cov.block(at, at, d, d) = member.posterior.cov;
    at += d;
  }
  return stacked;
}

FittedModel fit_fdt_forest(const Eigen::Ref<const MatrixXd>& x,
                           const Eigen::Ref<const VectorXd>& y,
                           const std::vector<ColumnSpec>& roles, const FdtOptions& options,
                           std::uint64_t seed, const FitOptions& fit) {
  TreeConfig tree_config;
  tree_config.max_leaf_nodes = options.max_leaf_nodes > 0
                                   ? options.max_leaf_nodes
                                   : default_max_leaf_nodes(static_cast<int>(x.rows()));
  tree_config.candidates_per_split = options.candidates_per_split;
  const ForestModel forest = fit_forest(x, y, options.n_trees, tree_config, seed, fit.threads);

  const auto all_roles = roles.empty() ? continuous_roles(static_cast<int>(x.cols())) : roles;
  std::vector<MemberSpec> specs;
  specs.reserve(forest.trees.size());
  const double weight = 1.0 / static_cast<double>(forest.trees.size());
  for (const auto& tree : forest.trees) {
    MemberSpec spec;
    spec.weight = weight;
    auto soft = tree_feature_map(tree, all_roles, TreeEvalMode::kSoft, options.c_continuous,
                                 options.c_discrete);
    spec.grad_map = soft;
    spec.fit_map = soft->with_mode(TreeEvalMode::kHard);
    specs.push_back(std::move(spec));
  }
  return fit_common("fdt_forest", specs, x, y, all_roles, seed, fit);
}

FittedModel fit_rfnn(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                     const std::vector<ColumnSpec>& roles, const RfnnOptions& options,
                     std::uint64_t seed, const FitOptions& fit) {
  const int d = static_cast<int>(x.cols());
  const int n_features = options.n_features > 0
                             ? options.n_features
                             : default_max_leaf_nodes(static_cast<int>(x.rows()));
  const auto all_roles = roles.empty() ? continuous_roles(d) : roles;
  auto map = std::make_shared<RandomFourierMap>(d, n_features, options.lengthscale,
                                                splitmix64(seed ^ 0x8f01u), all_roles);
  MemberSpec spec;
  spec.fit_map = map;
  spec.grad_map = map;
  return fit_common("rfnn", {spec}, x, y, all_roles, seed, fit);
}

FittedModel fit_additive(const Eigen::Ref<const MatrixXd>& x,
                         const Eigen::Ref<const VectorXd>& y,
                         const std::vector<ColumnSpec>& roles, const AdditiveOptions& options,
                         std::uint64_t seed, const FitOptions& fit) {
  const auto all_roles = roles.empty() ? continuous_roles(static_cast<int>(x.cols())) : roles;
  auto map = AdditiveBasisMap::fit(x, all_roles, options.interior_knots);
  MemberSpec spec;
  spec.fit_map = map;
  spec.grad_map = map;
  if (options.prior_center) {
    map->set_prior_center(*options.prior_center);
    spec.prior_mean = *options.prior_center;
  }
  return fit_common("additive_basis", {spec}, x, y, all_roles, seed, fit);
}

FittedModel combine_models(const std::vector<FittedModel>& models, std::uint64_t seed) {
  require(!models.empty(), "need at least one model to combine");
  FittedModel out;
  out.method = "ensemble";
  out.roles = models.front().roles;
  out.seed = seed;
  out.n_train = models.front().n_train;
  const double model_weight = 1.0 / static_cast<double>(models.size());
  double sigma2 = 0.0;
  for (const auto& model : models) {
    require(model.roles.size() == out.roles.size(), "member models must share the schema");
    sigma2 += model.sigma2;
    out.log_evidence += model.log_evidence;
    for (const auto& member : model.members) {
      ModelMember copy = member;
      copy.weight *= model_weight;
      out.members.push_back(std::move(copy));
    }
  }
  out.sigma2 = sigma2 * model_weight;
  return out;
}

// ---------------------------------------------------------------------------
// Importance

namespace {

// Streaming accumulators for the exact posterior mean of psi over every
// variable: E-part sum_i (sum_m w g_mi^T mean_m)^2 and trace part
// sum_i sum_m w^2 g_mi^T cov_m g_mi, with pairwise contrast rows for
// discrete variables.
struct MeanAccumulator {
  VectorXd mu_sq;
  VectorXd trace_sum;
  long rows = 0;

  explicit MeanAccumulator(int d) : mu_sq(VectorXd::Zero(d)), trace_sum(VectorXd::Zero(d)) {}
};

double sparse_dot_mean(const std::vector<std::pair<int, double>>& entries, const VectorXd& mean) {
  double total = 0.0;
  for (const auto& [leaf, value] : entries) total += value * mean[leaf];
  return total;
}

double sparse_quad(const std::vector<std::pair<int, double>>& entries, const MatrixXd& cov) {
  double total = 0.0;
  for (const auto& [a, va] : entries) {
    total += va * va * cov(a, a);
    for (const auto& [b, vb] : entries)
      if (b > a) total += 2.0 * va * vb * cov(a, b);
  }
  return total;
}

void accumulate_means_row(const FittedModel& model, const Eigen::Ref<const VectorXd>& x,
                          MeanAccumulator& acc,
                          std::vector<std::vector<std::pair<int, double>>>& scratch,
                          std::vector<double>& u, std::vector<double>& tv,
                          std::vector<std::vector<double>>& u_pairs,
                          std::vector<double>& tv_disc) {
  const auto& roles = model.roles;
  const int d = static_cast<int>(roles.size());
  std::fill(u.begin(), u.end(), 0.0);
  std::fill(tv.begin(), tv.end(), 0.0);
  for (int j = 0; j < d; ++j) {
    if (!roles[j].discrete()) continue;
    u_pairs[j].assign(static_cast<std::size_t>(level_pairs(roles[j])), 0.0);
    tv_disc[j] = 0.0;
  }

  for (const auto& member : model.members) {
    const double w = member.weight;
    const auto* tree = dynamic_cast<const SoftTreeMap*>(member.grad_map.get());
    if (tree != nullptr) {
      tree->sparse_partials(x, scratch);
      for (int j = 0; j < d; ++j) {
        if (roles[j].discrete() || scratch[j].empty()) continue;
        u[j] += w * sparse_dot_mean(scratch[j], member.posterior.mean);
        tv[j] += w * w * sparse_quad(scratch[j], member.posterior.cov);
      }
    } else if (const auto* additive =
                   dynamic_cast<const AdditiveBasisMap*>(member.grad_map.get())) {
      // partials live in one block per variable
      for (int j = 0; j < d; ++j) {
        if (roles[j].discrete()) continue;
        const auto [start, size] = additive->block(j);
        const VectorXd g = additive->partial(x, j).segment(start, size);
        u[j] += w * g.dot(member.posterior.mean.segment(start, size));
        tv[j] += w * w * g.dot(member.posterior.cov.block(start, start, size, size) * g);
      }
    } else {
      const MatrixXd partials = member.grad_map->partials_all(x);
      for (int j = 0; j < d; ++j) {
        if (roles[j].discrete()) continue;
        const auto g = partials.row(j);
        u[j] += w * g.dot(member.posterior.mean);
        tv[j] += w * w * g.dot(member.posterior.cov * g.transpose());
      }
    }
    // contrasts are prediction differences, so they go through the
    // representation the posterior was fit on (hard one-hot for trees)
    for (int j = 0; j < d; ++j) {
      if (!roles[j].discrete()) continue;
      const auto& levels = roles[j].levels;
      std::size_t pair = 0;
      for (std::size_t a = 0; a < levels.size(); ++a) {
        for (std::size_t b = a + 1; b < levels.size(); ++b, ++pair) {
          const VectorXd delta = member.fit_map->contrast(x, j, levels[a], levels[b]);
          u_pairs[j][pair] += w * delta.dot(member.posterior.mean);
          tv_disc[j] += w * w * delta.dot(member.posterior.cov * delta);
        }
      }
    }
  }

  for (int j = 0; j < d; ++j) {
    if (roles[j].discrete()) {
      for (const double up : u_pairs[j]) acc.mu_sq[j] += up * up;
      acc.trace_sum[j] += tv_disc[j];
    } else {
      acc.mu_sq[j] += u[j] * u[j];
      acc.trace_sum[j] += tv[j];
    }
  }
  ++acc.rows;
}

MeanAccumulator accumulate_means(const FittedModel& model, const Eigen::Ref<const MatrixXd>& x) {
  const int d = static_cast<int>(model.roles.size());
  MeanAccumulator acc(d);
  std::vector<std::vector<std::pair<int, double>>> scratch(d);
  std::vector<double> u(d), tv(d), tv_disc(d);
  std::vector<std::vector<double>> u_pairs(d);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    accumulate_means_row(model, x.row(i), acc, scratch, u, tv, u_pairs, tv_disc);
  return acc;
}

// Per-variable Gaussian description of the stacked derivative projections
// u = A^T beta on a fixed row set: mean vector and covariance.
struct ProjectedGaussian {
  VectorXd mean;  // N (rows x pairs)
  MatrixXd cov;   // N x N
  long rows = 0;  // number of data rows behind the N projections
};

ProjectedGaussian project_variable(const FittedModel& model, const Eigen::Ref<const MatrixXd>& x,
                                   int variable) {
  const auto& spec = model.roles[variable];
  const long rows = x.rows();
  const int pairs = spec.discrete() ? level_pairs(spec) : 1;
  const Eigen::Index n = rows * pairs;
  ProjectedGaussian out;
  out.rows = rows;
  out.mean = VectorXd::Zero(n);
  out.cov = MatrixXd::Zero(n, n);
  for (const auto& member : model.members) {
    const int dm = member.grad_map->output_dim();
    MatrixXd a(dm, n);
    for (long i = 0; i < rows; ++i) {
      if (spec.discrete()) {
        int pair = 0;
        for (std::size_t la = 0; la < spec.levels.size(); ++la)
          for (std::size_t lb = la + 1; lb < spec.levels.size(); ++lb, ++pair)
            a.col(i * pairs + pair) =
                member.weight *
                member.fit_map->contrast(x.row(i), variable, spec.levels[la], spec.levels[lb]);
      } else {
        a.col(i) = member.weight * member.grad_map->partial(x.row(i), variable);
      }
    }
    out.mean.noalias() += a.transpose() * member.posterior.mean;
    out.cov.noalias() += a.transpose() * (member.posterior.cov * a);
  }
  out.cov = ((out.cov + out.cov.transpose()) * 0.5).eval();
  return out;
}

VectorXd sample_projected_psi(const ProjectedGaussian& proj, int k, std::mt19937_64& rng) {
  const Eigen::Index n = proj.mean.size();
  MatrixXd root;
  Eigen::LLT<MatrixXd> llt(proj.cov);
  if (llt.info() == Eigen::Success) {
    root = llt.matrixL();
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(proj.cov);
    if (eig.info() != Eigen::Success)
      throw NumericalError("projection covariance eigendecomposition failed");
    root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd out(k);
  VectorXd z(n);
  for (int s = 0; s < k; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) z[i] = gauss(rng);
    out[s] = (proj.mean + root * z).squaredNorm() / static_cast<double>(proj.rows);
  }
  return out;
}

ImportanceSummary single_member_importance(const FittedModel& model,
                                           const Eigen::Ref<const MatrixXd>& x,
                                           const ModelImportanceOptions& options,
                                           std::mt19937_64& rng) {
  const auto& member = model.members.front();
  const int d = static_cast<int>(model.roles.size());
  std::vector<DerivativeGram> grams;
  grams.reserve(d);
  for (int j = 0; j < d; ++j) {
    const bool discrete = model.roles[j].discrete();
    grams.emplace_back(member.grad_map->output_dim(), j,
                       discrete ? GramKind::kContrast : GramKind::kDerivative);
    // derivatives need the smoothed representation; contrasts are prediction
    // differences on the fitted one
    grams.back().accumulate(discrete ? *member.fit_map : *member.grad_map, x);
  }
  if (options.mode == ImportanceMode::kFull) {
    SummarizeOptions opts;
    opts.mc_samples = options.mc_samples;
    opts.grid_size = options.grid_size;
    opts.keep_samples = options.keep_samples;
    return summarize(member.posterior, grams, rng, opts);
  }
  ImportanceSummary summary;
  summary.variables.resize(d);
  for (int j = 0; j < d; ++j) {
    auto& var = summary.variables[j];
    var.variable = j;
    const PsiMoments moments = psi_moments_exact(member.posterior, grams[j]);
    var.mean = moments.mean;
    var.variance = moments.variance;
    var.sd = std::sqrt(std::max(0.0, moments.variance));
  }
  assign_ranks(summary.variables);
  return summary;
}

ImportanceSummary ensemble_importance(const FittedModel& model,
                                      const Eigen::Ref<const MatrixXd>& x,
                                      const ModelImportanceOptions& options,
                                      std::mt19937_64& rng) {
  const int d = static_cast<int>(model.roles.size());
  const MeanAccumulator acc = accumulate_means(model, x);

  ImportanceSummary summary;
  summary.variables.resize(d);
  for (int j = 0; j < d; ++j) {
    summary.variables[j].variable = j;
    summary.variables[j].mean =
        (acc.mu_sq[j] + acc.trace_sum[j]) / static_cast<double>(acc.rows);
  }

  if (options.mode != ImportanceMode::kMeans) {
    // Distributional pieces on a capped row subset; exact means above always
    // use every row.
    MatrixXd subset;
    if (x.rows() > options.max_rows) {
      std::vector<Eigen::Index> index(static_cast<std::size_t>(x.rows()));
      std::iota(index.begin(), index.end(), Eigen::Index{0});
      std::shuffle(index.begin(), index.end(), rng);
      index.resize(static_cast<std::size_t>(options.max_rows));
      std::sort(index.begin(), index.end());
      subset.resize(options.max_rows, x.cols());
      for (long i = 0; i < options.max_rows; ++i) subset.row(i) = x.row(index[i]);
    } else {
      subset = x;
    }
    for (int j = 0; j < d; ++j) {
      const ProjectedGaussian proj = project_variable(model, subset, j);
      const double n = static_cast<double>(proj.rows);
      auto& var = summary.variables[j];
      var.variance = (2.0 * proj.cov.squaredNorm() +
                      4.0 * proj.mean.dot(proj.cov * proj.mean)) /
                     (n * n);
      var.sd = std::sqrt(std::max(0.0, var.variance));
      if (options.mode == ImportanceMode::kFull)
        var.samples = sample_projected_psi(proj, options.mc_samples, rng);
    }
  }

  assign_ranks(summary.variables);
  if (options.mode == ImportanceMode::kFull)
    build_survival(summary, options.grid_size, options.keep_samples);
  return summary;
}

}  // namespace

ImportanceSummary model_importance(const FittedModel& model,
                                   const Eigen::Ref<const MatrixXd>& x,
                                   const ModelImportanceOptions& options, std::mt19937_64& rng) {
  require(!model.members.empty(), "model has no members");
  require(static_cast<int>(x.cols()) == model.input_dim(),
          "column count must match the model input dimension");
  if (model.members.size() == 1 && model.members.front().weight == 1.0)
    return single_member_importance(model, x, options, rng);
  return ensemble_importance(model, x, options, rng);
}

VectorXd model_importance_means(const FittedModel& model, const Eigen::Ref<const MatrixXd>& x) {
  require(!model.members.empty(), "model has no members");
  require(static_cast<int>(x.cols()) == model.input_dim(),
          "column count must match the model input dimension");
  const MeanAccumulator acc = accumulate_means(model, x);
  return (acc.mu_sq + acc.trace_sum) / static_cast<double>(acc.rows);
}

}  // namespace psivar
