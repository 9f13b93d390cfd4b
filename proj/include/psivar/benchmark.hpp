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
#ifndef PSIVAR_BENCHMARK_HPP
#define PSIVAR_BENCHMARK_HPP

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "psivar/model.hpp"
#include "psivar/synthetic.hpp"

namespace psivar {

struct BenchScenario {
  OutcomeKind f0 = OutcomeKind::kLinear;
  FeatureKind features = FeatureKind::kContinuous;
  int n = 100;
  int d = 25;
};

struct BenchConfig {
  std::vector<BenchScenario> scenarios;
  std::vector<std::string> methods;  // fdt_forest | rfnn | additive_basis
  int repeats = 20;
  std::uint64_t seed = 0;

  // method hyperparameters; zeros mean the size-driven defaults
  int n_trees = 50;
  int max_leaf_nodes = 0;
  int candidates_per_split = 0;
  double c_continuous = 1.0;
  double c_discrete = 0.1;
  int rff_dim = 0;
  std::vector<double> lengthscale_grid = {5.0, 10.0, 16.0, 23.0};
  int interior_knots = 10;

  double noise_variance = 0.01;
  bool noisy_test_mse = false;  // default scores against the noiseless outcome
  bool lengthscale_validation_split = false;
  int threads = 1;
};

struct BenchResult {
  BenchScenario scenario;
  std::string method;
  std::uint64_t seed = 0;  // cell seed (data + repeat)
  double auroc = 0.0;
  double test_mse = 0.0;
  double wall_time_s = 0.0;
  bool ok = true;
  std::string note;
};

/// Stable content key for resume/skip logic.
std::string bench_key(const BenchScenario& scenario, const std::string& method,
                      std::uint64_t seed);

std::uint64_t bench_cell_seed(std::uint64_t base_seed, const BenchScenario& scenario,
                              int repeat);

BenchResult run_benchmark_cell(const BenchConfig& config, const BenchScenario& scenario,
                               const std::string& method, int repeat);

/// Full grid; per-cell failures are recorded in the result rows and never
/// abort the run. Cells whose key is in `completed` are skipped. Results are
/// ordered by (scenario, method, repeat).
std::vector<BenchResult> run_benchmark(const BenchConfig& config,
                                       const std::set<std::string>& completed = {},
                                       const std::function<void(const BenchResult&)>& on_result =
                                           nullptr);

/// Results CSV: f0_kind, feature_kind, n, d, method, seed, auroc, test_mse,
/// wall_time_s. Zeroing the timings makes reruns byte-identical.
std::string results_to_csv(const std::vector<BenchResult>& results, bool include_timing = true);

}  // namespace psivar

#endif  // PSIVAR_BENCHMARK_HPP
