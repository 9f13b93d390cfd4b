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
#include "psivar/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace psivar {

DerivativeGram::DerivativeGram(int dim, int variable, GramKind kind)
    : gram_(MatrixXd::Zero(dim, dim)), variable_(variable), kind_(kind) {
  require(dim > 0, "gram dimension must be positive");
  require(variable >= 0, "variable index must be nonnegative");
}

void DerivativeGram::accumulate(const FeatureMap& map, const Eigen::Ref<const MatrixXd>& x) {
  require(map.output_dim() == gram_.rows(), "map output dimension must match gram dimension");
  require(static_cast<int>(x.cols()) == map.input_dim(),
          "batch column count must equal map input dimension");
  const ColumnSpec& spec = map.column_roles().at(variable_);
  if (kind_ == GramKind::kDerivative) {
    if (spec.discrete())
      throw DimensionError("derivative gram requested for discrete variable " +
                           std::to_string(variable_));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      add_outer(map.partial(x.row(i), variable_));
  } else {
    if (!spec.discrete())
      throw DimensionError("contrast gram requested for continuous variable " +
                           std::to_string(variable_));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (std::size_t a = 0; a < spec.levels.size(); ++a)
        for (std::size_t b = a + 1; b < spec.levels.size(); ++b)
          add_outer(map.contrast(x.row(i), variable_, spec.levels[a], spec.levels[b]));
    }
  }
  count_ += x.rows();
}

void DerivativeGram::add_outer(const Eigen::Ref<const VectorXd>& g) {
  require(g.size() == gram_.rows(), "vector length must match gram dimension");
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(g);
  gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
}

void DerivativeGram::merge(const DerivativeGram& other) {
  require(other.gram_.rows() == gram_.rows(), "gram dimensions must match");
  require(other.variable_ == variable_ && other.kind_ == kind_,
          "grams must describe the same variable and kind");
  gram_ += other.gram_;
  count_ += other.count_;
}

double psi_point(const Eigen::Ref<const VectorXd>& beta, const DerivativeGram& gram) {
  require(beta.size() == gram.matrix().rows(), "weight length must match gram dimension");
  require(gram.sample_count() >= 1, "gram holds no samples");
  return beta.dot(gram.matrix() * beta) / static_cast<double>(gram.sample_count());
}

VectorXd psi_samples(const WeightPosterior& posterior, const DerivativeGram& gram, int k,
                     std::mt19937_64& rng) {
  require(k >= 1, "sample count must be at least 1");
  require(posterior.dim() == gram.matrix().rows(),
          "posterior dimension must match gram dimension");
  require(gram.sample_count() >= 1, "gram holds no samples");
  const MatrixXd draws = posterior.sample(k, rng);  // k x D
  const double n = static_cast<double>(gram.sample_count());
  const MatrixXd projected = draws * gram.matrix();  // k x D
  VectorXd out(k);
  for (int s = 0; s < k; ++s) out[s] = std::max(0.0, projected.row(s).dot(draws.row(s)) / n);
  return out;
}

double psi_mean_exact(const WeightPosterior& posterior, const DerivativeGram& gram) {
  require(posterior.dim() == gram.matrix().rows(),
          "posterior dimension must match gram dimension");
  require(gram.sample_count() >= 1, "gram holds no samples");
  const MatrixXd& g = gram.matrix();
  const double quad = posterior.mean.dot(g * posterior.mean);
  const double trace = (g * posterior.cov).trace();
  return (quad + trace) / static_cast<double>(gram.sample_count());
}

PsiMoments psi_moments_exact(const WeightPosterior& posterior, const DerivativeGram& gram) {
  require(posterior.dim() == gram.matrix().rows(),
          "posterior dimension must match gram dimension");
  require(gram.sample_count() >= 1, "gram holds no samples");
  const MatrixXd& g = gram.matrix();
  const double n = static_cast<double>(gram.sample_count());
  const MatrixXd gc = g * posterior.cov;
  PsiMoments out;
  out.mean = (posterior.mean.dot(g * posterior.mean) + gc.trace()) / n;
  const VectorXd gm = g * posterior.mean;
  out.variance =
      (2.0 * (gc * gc).trace() + 4.0 * gm.dot(posterior.cov * gm)) / (n * n);
  return out;
}

PsiMoments psi_moments_spectral(const WeightPosterior& posterior, const DerivativeGram& gram) {
  require(posterior.dim() == gram.matrix().rows(),
          "posterior dimension must match gram dimension");
  require(gram.sample_count() >= 1, "gram holds no samples");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram.matrix());
  if (eig.info() != Eigen::Success)
    throw NumericalError("eigendecomposition of the derivative gram failed");
  const double n = static_cast<double>(gram.sample_count());
  PsiMoments out;
  for (int i = 0; i < posterior.dim(); ++i) {
    const double lambda = eig.eigenvalues()[i];
    const VectorXd q = eig.eigenvectors().col(i);
    const double v = q.dot(posterior.cov * q);
    const double proj = q.dot(posterior.mean);
    const double noncentrality = v > 0.0 ? proj * proj / v : 0.0;
    const double lv = lambda * v;
    out.mean += v > 0.0 ? lv * (1.0 + noncentrality) : lambda * proj * proj;
    out.variance += 2.0 * lv * lv * (1.0 + 2.0 * noncentrality);
  }
  out.mean /= n;
  out.variance /= n * n;
  return out;
}

std::vector<std::pair<double, double>> survival_curve(const Eigen::Ref<const VectorXd>& samples,
                                                      const std::vector<double>& grid) {
  if (samples.size() == 0) throw DataError("survival curve needs at least one sample");
  for (std::size_t i = 1; i < grid.size(); ++i)
    require(grid[i] >= grid[i - 1], "survival grid must be ascending");
  std::vector<double> sorted(samples.data(), samples.data() + samples.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(grid.size());
  const double n = static_cast<double>(sorted.size());
  for (const double s : grid) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), s);
    out.emplace_back(s, static_cast<double>(above) / n);
  }
  return out;
}

double empirical_quantile(VectorXd samples, double q) {
  require(samples.size() > 0, "quantile of an empty sample");
  std::sort(samples.data(), samples.data() + samples.size());
  const double pos = q * (static_cast<double>(samples.size()) - 1.0);
  const auto idx = static_cast<Eigen::Index>(pos);
  if (idx + 1 >= samples.size()) return samples[samples.size() - 1];
  const double frac = pos - static_cast<double>(idx);
  return samples[idx] + frac * (samples[idx + 1] - samples[idx]);
}

void assign_ranks(std::vector<VariableImportance>& variables) {
  std::vector<std::size_t> order(variables.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return variables[a].mean > variables[b].mean;
  });
  for (std::size_t r = 0; r < order.size(); ++r)
    variables[order[r]].rank = static_cast<int>(r) + 1;
  double max_mean = 0.0;
  for (const auto& var : variables) max_mean = std::max(max_mean, var.mean);
  for (auto& var : variables)
    var.normalized_mean = max_mean > 0.0 ? var.mean / max_mean : 0.0;
}

void build_survival(ImportanceSummary& summary, int grid_size, bool keep_samples) {
  require(grid_size >= 2, "grid_size must be at least 2");
  Eigen::Index total = 0;
  for (const auto& var : summary.variables) total += var.samples.size();
  require(total > 0, "survival grid needs samples");
  VectorXd pooled(total);
  Eigen::Index at = 0;
  for (auto& var : summary.variables) {
    pooled.segment(at, var.samples.size()) = var.samples;
    at += var.samples.size();
  }
  const double top = empirical_quantile(pooled, 0.995);
  summary.survival_grid.resize(grid_size);
  for (int i = 0; i < grid_size; ++i)
    summary.survival_grid[i] = top * static_cast<double>(i) / (grid_size - 1);
  summary.survival.resize(static_cast<Eigen::Index>(summary.variables.size()), grid_size);
  for (std::size_t j = 0; j < summary.variables.size(); ++j) {
    auto& var = summary.variables[j];
    var.q05 = empirical_quantile(var.samples, 0.05);
    var.q50 = empirical_quantile(var.samples, 0.50);
    var.q95 = empirical_quantile(var.samples, 0.95);
    const auto curve = survival_curve(var.samples, summary.survival_grid);
    for (int i = 0; i < grid_size; ++i) summary.survival(j, i) = curve[i].second;
    if (!keep_samples) var.samples.resize(0);
  }
}

ImportanceSummary summarize(const WeightPosterior& posterior,
                            const std::vector<DerivativeGram>& grams, std::mt19937_64& rng,
                            const SummarizeOptions& options) {
  require(!grams.empty(), "at least one gram is required");
  require(options.mc_samples >= 1, "mc_samples must be at least 1");

  ImportanceSummary summary;
  summary.variables.resize(grams.size());
  for (std::size_t j = 0; j < grams.size(); ++j) {
    VariableImportance& var = summary.variables[j];
    var.variable = grams[j].variable();
    const PsiMoments moments = psi_moments_exact(posterior, grams[j]);
    var.mean = moments.mean;
    var.variance = moments.variance;
    var.sd = std::sqrt(std::max(0.0, moments.variance));
    var.samples = psi_samples(posterior, grams[j], options.mc_samples, rng);
  }
  assign_ranks(summary.variables);
  build_survival(summary, options.grid_size, options.keep_samples);
  return summary;
}

}  // namespace psivar
