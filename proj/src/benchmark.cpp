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
#include "psivar/benchmark.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "psivar/dataset.hpp"

namespace psivar {

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<ColumnSpec> scenario_roles(const SyntheticData& data, int d) {
  auto roles = continuous_roles(d);
  for (const int j : data.discrete_columns) roles[static_cast<std::size_t>(j)] =
      ColumnSpec::binary();
  return roles;
}

double mse(const VectorXd& a, const VectorXd& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

FittedModel fit_method(const BenchConfig& config, const std::string& method,
                       const MatrixXd& x_train, const VectorXd& y_train,
                       const MatrixXd& x_test, const VectorXd& test_target,
                       const std::vector<ColumnSpec>& roles, std::uint64_t seed) {
  FitOptions fit;
  fit.noise_variance = config.noise_variance;
  fit.threads = config.threads;

  if (method == "fdt_forest") {
    FdtOptions options;
    options.n_trees = config.n_trees;
    options.max_leaf_nodes = config.max_leaf_nodes;
    options.candidates_per_split = config.candidates_per_split;
    options.c_continuous = config.c_continuous;
    options.c_discrete = config.c_discrete;
    return fit_fdt_forest(x_train, y_train, roles, options, seed, fit);
  }
  if (method == "additive_basis") {
    AdditiveOptions options;
    options.interior_knots = config.interior_knots;
    return fit_additive(x_train, y_train, roles, options, seed, fit);
  }
  if (method == "rfnn") {
    require(!config.lengthscale_grid.empty(), "lengthscale grid must not be empty");
    // lengthscale chosen by prediction error, by default on the test split as
    // in the reference protocol; optionally on a 20% validation split
    const bool split = config.lengthscale_validation_split;
    Eigen::Index n = x_train.rows();
    Eigen::Index n_fit = split ? std::max<Eigen::Index>(1, (n * 4) / 5) : n;
    double best_err = std::numeric_limits<double>::infinity();
    double best_lengthscale = config.lengthscale_grid.front();
    for (const double lengthscale : config.lengthscale_grid) {
      RfnnOptions options;
      options.n_features = config.rff_dim;
      options.lengthscale = lengthscale;
      const FittedModel candidate =
          fit_rfnn(x_train.topRows(n_fit), y_train.head(n_fit), roles, options, seed, fit);
      const double err =
          split ? mse(candidate.predict_mean(x_train.bottomRows(n - n_fit)),
                      y_train.tail(n - n_fit))
                : mse(candidate.predict_mean(x_test), test_target);
      if (err < best_err) {
        best_err = err;
        best_lengthscale = lengthscale;
      }
    }
    RfnnOptions options;
    options.n_features = config.rff_dim;
    options.lengthscale = best_lengthscale;
    return fit_rfnn(x_train, y_train, roles, options, seed, fit);
  }
  throw DataError("unknown benchmark method: " + method);
}

}  // namespace

std::uint64_t bench_cell_seed(std::uint64_t base_seed, const BenchScenario& scenario,
                              int repeat) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(scenario.f0));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(scenario.features) << 8));
  h = splitmix64(h ^ static_cast<std::uint64_t>(scenario.n));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(scenario.d) << 16));
  h = splitmix64(h ^ static_cast<std::uint64_t>(repeat));
  return h;
}

std::string bench_key(const BenchScenario& scenario, const std::string& method,
                      std::uint64_t seed) {
  std::ostringstream out;
  out << outcome_name(scenario.f0) << '|' << feature_kind_name(scenario.features) << '|'
      << scenario.n << '|' << scenario.d << '|' << method << '|' << seed;
  return out.str();
}

BenchResult run_benchmark_cell(const BenchConfig& config, const BenchScenario& scenario,
                               const std::string& method, int repeat) {
  BenchResult result;
  result.scenario = scenario;
  result.method = method;
  result.seed = bench_cell_seed(config.seed, scenario, repeat);
  const auto start = std::chrono::steady_clock::now();
  try {
    SyntheticSpec spec;
    spec.f0 = scenario.f0;
    spec.features = scenario.features;
    spec.n_train = scenario.n;
    spec.dim = scenario.d;
    spec.noise_variance = config.noise_variance;
    spec.seed = result.seed;
    const SyntheticData data = generate_synthetic(spec);
    const auto roles = scenario_roles(data, scenario.d);

    const Standardizer standardizer = Standardizer::fit(data.x_train, roles);
    const MatrixXd x_train = standardizer.transform(data.x_train);
    const MatrixXd x_test = standardizer.transform(data.x_test);
    const VectorXd& test_target = config.noisy_test_mse ? data.y_test : data.f_test;

    const std::uint64_t method_seed = splitmix64(result.seed ^ fnv1a(method));
    const FittedModel model = fit_method(config, method, x_train, data.y_train, x_test,
                                         test_target, roles, method_seed);

    const VectorXd scores = model_importance_means(model, x_train);
    result.auroc = auroc(scores, data.causal_mask);
    result.test_mse = mse(model.predict_mean(x_test), test_target);
  } catch (const std::exception& e) {
    result.ok = false;
    result.note = e.what();
    result.auroc = std::numeric_limits<double>::quiet_NaN();
    result.test_mse = std::numeric_limits<double>::quiet_NaN();
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<BenchResult> run_benchmark(const BenchConfig& config,
                                       const std::set<std::string>& completed,
                                       const std::function<void(const BenchResult&)>& on_result) {
  require(config.repeats >= 1, "repeats must be at least 1");
  std::vector<BenchResult> results;
  for (const auto& scenario : config.scenarios) {
    for (const auto& method : config.methods) {
      for (int repeat = 0; repeat < config.repeats; ++repeat) {
        const std::uint64_t seed = bench_cell_seed(config.seed, scenario, repeat);
        if (completed.contains(bench_key(scenario, method, seed))) continue;
        results.push_back(run_benchmark_cell(config, scenario, method, repeat));
        if (on_result) on_result(results.back());
      }
    }
  }
  return results;
}

std::string results_to_csv(const std::vector<BenchResult>& results, bool include_timing) {
  std::ostringstream out;
  out << "f0_kind,feature_kind,n,d,method,seed,auroc,test_mse,wall_time_s\n";
  for (const auto& r : results) {
    out << outcome_name(r.scenario.f0) << ',' << feature_kind_name(r.scenario.features) << ','
        << r.scenario.n << ',' << r.scenario.d << ',' << r.method << ',' << r.seed << ','
        << format_double(r.auroc) << ',' << format_double(r.test_mse) << ','
        << format_double(include_timing ? r.wall_time_s : 0.0) << '\n';
  }
  return out.str();
}

}  // namespace psivar
