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
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "psivar/benchmark.hpp"
#include "psivar/dataset.hpp"
#include "psivar/model.hpp"
#include "psivar/serialize.hpp"

namespace {

using namespace psivar;
namespace fs = std::filesystem;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct RunConfig {
  std::string dataset;
  std::string target = "y";
  std::string method = "additive_basis";
  Json schema;  // {"columns": [{"name", "role", "levels"}]}
  std::uint64_t seed = 0;
  std::string output = "psivar_out";
  int threads = 1;

  // hyperparameters
  int n_trees = 50;
  int max_leaf_nodes = 0;        // 0: ceil(sqrt(n) ln n)
  int candidates_per_split = 0;  // 0: all features
  int rff_dim = 0;               // 0: ceil(sqrt(n) ln n)
  double lengthscale = 10.0;
  std::vector<double> lengthscale_grid;
  int interior_knots = 10;
  double smooth_c_continuous = 1.0;
  double smooth_c_discrete = 0.1;
  double noise_variance = 0.0;  // 0: estimate from data
  int mc_samples = 1000;
  int batch_size = 256;
  long max_rows = 2000;
  int grid_size = 200;
  std::string prior_center_file;
  std::vector<std::string> ensemble_members = {"rfnn", "additive_basis"};

  Json benchmark;  // grid declaration
};

template <typename T>
void maybe(const Json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open config file: " + path);
  Json j;
  try {
    file >> j;
  } catch (const Json::exception& e) {
    throw DataError("malformed config file: " + std::string(e.what()));
  }
  maybe(j, "dataset", config.dataset);
  maybe(j, "target", config.target);
  maybe(j, "method", config.method);
  maybe(j, "seed", config.seed);
  maybe(j, "output", config.output);
  maybe(j, "threads", config.threads);
  if (j.contains("schema")) config.schema = j["schema"];
  if (j.contains("hyperparameters")) {
    const Json& h = j["hyperparameters"];
    maybe(h, "n_trees", config.n_trees);
    maybe(h, "max_leaf_nodes", config.max_leaf_nodes);
    maybe(h, "candidates_per_split", config.candidates_per_split);
    maybe(h, "rff_dim", config.rff_dim);
    maybe(h, "lengthscale", config.lengthscale);
    maybe(h, "lengthscale_grid", config.lengthscale_grid);
    maybe(h, "interior_knots", config.interior_knots);
    maybe(h, "smooth_c_continuous", config.smooth_c_continuous);
    maybe(h, "smooth_c_discrete", config.smooth_c_discrete);
    maybe(h, "noise_variance", config.noise_variance);
    maybe(h, "mc_samples", config.mc_samples);
    maybe(h, "batch_size", config.batch_size);
    maybe(h, "max_rows", config.max_rows);
    maybe(h, "grid_size", config.grid_size);
    maybe(h, "prior_center_file", config.prior_center_file);
    maybe(h, "ensemble_members", config.ensemble_members);
  }
  if (j.contains("benchmark")) config.benchmark = j["benchmark"];
}

// Feature schema: every non-target CSV column in file order; declared roles
// override the continuous default. A declared column the file lacks is a
// usage error.
Schema resolve_schema(const DataTable& table, const RunConfig& config) {
  std::map<std::string, ColumnSpec> declared;
  if (config.schema.contains("columns")) {
    for (const auto& entry : config.schema.at("columns")) {
      const auto name = entry.at("name").get<std::string>();
      if (table.column_index(name) < 0)
        throw DimensionError("schema column '" + name + "' not found in the dataset");
      ColumnSpec spec;
      spec.role = role_from_name(entry.at("role").get<std::string>());
      if (entry.contains("levels")) spec.levels = entry["levels"].get<std::vector<double>>();
      if (spec.role == ColumnRole::kBinary && spec.levels.empty()) spec.levels = {0.0, 1.0};
      declared[name] = std::move(spec);
    }
  }
  if (table.column_index(config.target) < 0)
    throw DimensionError("target column '" + config.target + "' not found in the dataset");
  Schema schema;
  for (const auto& name : table.columns) {
    if (name == config.target) continue;
    schema.names.push_back(name);
    const auto it = declared.find(name);
    schema.roles.push_back(it == declared.end() ? ColumnSpec::continuous() : it->second);
  }
  if (schema.size() == 0) throw DataError("dataset has no feature columns");
  return schema;
}

std::optional<VectorXd> load_prior_center(const std::string& path) {
  if (path.empty()) return std::nullopt;
  std::ifstream file(path);
  if (!file) throw DataError("cannot open prior center file: " + path);
  std::vector<double> values;
  std::string line;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    values.push_back(std::stod(line));
  }
  VectorXd center(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    center[static_cast<Eigen::Index>(i)] = values[i];
  return center;
}

FittedModel fit_single(const RunConfig& config, const std::string& method, const MatrixXd& x,
                       const VectorXd& y, const std::vector<ColumnSpec>& roles,
                       std::uint64_t seed) {
  FitOptions fit;
  fit.noise_variance = config.noise_variance;
  fit.batch_size = config.batch_size;
  fit.threads = config.threads;
  if (method == "fdt_forest") {
    FdtOptions options;
    options.n_trees = config.n_trees;
    options.max_leaf_nodes = config.max_leaf_nodes;
    options.candidates_per_split = config.candidates_per_split;
    options.c_continuous = config.smooth_c_continuous;
    options.c_discrete = config.smooth_c_discrete;
    return fit_fdt_forest(x, y, roles, options, seed, fit);
  }
  if (method == "rfnn") {
    RfnnOptions options;
    options.n_features = config.rff_dim;
    options.lengthscale = config.lengthscale;
    if (!config.lengthscale_grid.empty()) {
      // pick by squared error on a 20% holdout, then refit on all rows
      const Eigen::Index n = x.rows();
      const Eigen::Index n_fit = std::max<Eigen::Index>(1, (n * 4) / 5);
      double best_err = std::numeric_limits<double>::infinity();
      for (const double candidate : config.lengthscale_grid) {
        RfnnOptions probe = options;
        probe.lengthscale = candidate;
        const FittedModel trial =
            fit_rfnn(x.topRows(n_fit), y.head(n_fit), roles, probe, seed, fit);
        const double err =
            (trial.predict_mean(x.bottomRows(n - n_fit)) - y.tail(n - n_fit)).squaredNorm();
        if (err < best_err) {
          best_err = err;
          options.lengthscale = candidate;
        }
      }
    }
    return fit_rfnn(x, y, roles, options, seed, fit);
  }
  if (method == "additive_basis") {
    AdditiveOptions options;
    options.interior_knots = config.interior_knots;
    options.prior_center = load_prior_center(config.prior_center_file);
    return fit_additive(x, y, roles, options, seed, fit);
  }
  throw DimensionError("unknown method: " + method);
}

FittedModel fit_model(const RunConfig& config, const MatrixXd& x, const VectorXd& y,
                      const std::vector<ColumnSpec>& roles) {
  if (config.method == "ensemble") {
    std::vector<FittedModel> members;
    std::uint64_t stream = 0;
    for (const auto& member : config.ensemble_members)
      members.push_back(
          fit_single(config, member, x, y, roles, splitmix64(config.seed ^ ++stream)));
    return combine_models(members, config.seed);
  }
  return fit_single(config, config.method, x, y, roles, config.seed);
}

int cmd_fit(const RunConfig& config) {
  if (config.dataset.empty()) throw DimensionError("fit requires a dataset (--data or config)");
  const DataTable table = read_csv(config.dataset);
  ModelBundle bundle;
  bundle.schema = resolve_schema(table, config);
  bundle.target = config.target;
  const SplitData data = split_features(table, bundle.schema, config.target);
  check_discrete_levels(data.x, bundle.schema.roles, bundle.schema.names);
  if (data.x.rows() < 2) throw DataError("need at least two rows to fit");

  bundle.standardizer = Standardizer::fit(data.x, bundle.schema.roles);
  const MatrixXd x = bundle.standardizer.transform(data.x);
  bundle.model = fit_model(config, x, data.y, bundle.schema.roles);
  save_bundle(bundle, config.output);

  std::ostringstream line;
  line << "fit: method=" << bundle.model.method << " n=" << x.rows() << " d=" << x.cols()
       << " D=" << bundle.model.total_output_dim()
       << " sigma2=" << format_double(bundle.model.sigma2);
  if (bundle.model.method == "fdt_forest")
    line << " n_trees=" << bundle.model.members.size() << " max_leaf_nodes="
         << (config.max_leaf_nodes > 0 ? config.max_leaf_nodes
                                       : default_max_leaf_nodes(static_cast<int>(x.rows())));
  line << " log_evidence=" << format_double(bundle.model.log_evidence);
  std::cout << line.str() << "\n";
  std::cout << "bundle written to " << (fs::path(config.output) / "model.json").string() << "\n";
  return 0;
}

struct LoadedData {
  ModelBundle bundle;
  MatrixXd x;  // standardized features
};

LoadedData load_for_scoring(const RunConfig& config, const std::string& model_dir) {
  LoadedData out;
  out.bundle = load_bundle(model_dir.empty() ? config.output : model_dir);
  if (config.dataset.empty()) throw DimensionError("a dataset is required (--data or config)");
  const DataTable table = read_csv(config.dataset);
  for (const auto& name : out.bundle.schema.names)
    if (table.column_index(name) < 0)
      throw DataError("dataset is missing the fitted feature column '" + name + "'");
  MatrixXd raw = feature_matrix(table, out.bundle.schema);
  check_discrete_levels(raw, out.bundle.schema.roles, out.bundle.schema.names);
  out.x = out.bundle.standardizer.transform(raw);
  return out;
}

ImportanceSummary score_importance(const RunConfig& config, const LoadedData& loaded,
                                   bool keep_samples) {
  auto rng = derive_rng(config.seed, 0x1a5);
  ModelImportanceOptions options;
  options.mode = ImportanceMode::kFull;
  options.mc_samples = config.mc_samples;
  options.grid_size = config.grid_size;
  options.keep_samples = keep_samples;
  options.max_rows = config.max_rows;
  return model_importance(loaded.bundle.model, loaded.x, options, rng);
}

int cmd_importance(const RunConfig& config, const std::string& model_dir, bool raw_samples) {
  const LoadedData loaded = load_for_scoring(config, model_dir);
  const ImportanceSummary summary = score_importance(config, loaded, raw_samples);
  fs::create_directories(config.output);

  std::ostringstream imp;
  imp << "feature,psi_mean,psi_sd,q05,q50,q95,rank,normalized_mean\n";
  for (std::size_t j = 0; j < summary.variables.size(); ++j) {
    const auto& var = summary.variables[j];
    imp << loaded.bundle.schema.names[j] << ',' << format_double(var.mean) << ','
        << format_double(var.sd) << ',' << format_double(var.q05) << ','
        << format_double(var.q50) << ',' << format_double(var.q95) << ',' << var.rank << ','
        << format_double(var.normalized_mean) << '\n';
  }
  write_text_atomic(fs::path(config.output) / "importance.csv", imp.str());

  std::ostringstream surv;
  surv << "feature,s,survival\n";
  for (std::size_t j = 0; j < summary.variables.size(); ++j)
    for (std::size_t i = 0; i < summary.survival_grid.size(); ++i)
      surv << loaded.bundle.schema.names[j] << ',' << format_double(summary.survival_grid[i])
           << ','
           << format_double(
                  summary.survival(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)))
           << '\n';
  write_text_atomic(fs::path(config.output) / "survival.csv", surv.str());

  if (raw_samples) {
    std::ostringstream raw;
    raw << "feature,sample\n";
    for (std::size_t j = 0; j < summary.variables.size(); ++j)
      for (Eigen::Index s = 0; s < summary.variables[j].samples.size(); ++s)
        raw << loaded.bundle.schema.names[j] << ','
            << format_double(summary.variables[j].samples[s]) << '\n';
    write_text_atomic(fs::path(config.output) / "samples.csv", raw.str());
  }
  std::cout << "importance written to " << (fs::path(config.output) / "importance.csv").string()
            << "\n";
  return 0;
}

int cmd_path(const RunConfig& config, const std::string& model_dir) {
  const LoadedData loaded = load_for_scoring(config, model_dir);
  const ImportanceSummary summary = score_importance(config, loaded, true);

  // normalize by the maximum posterior mean, then share one threshold grid
  double max_mean = 0.0;
  for (const auto& var : summary.variables) max_mean = std::max(max_mean, var.mean);
  const double scale = max_mean > 0.0 ? max_mean : 1.0;

  Eigen::Index total = 0;
  for (const auto& var : summary.variables) total += var.samples.size();
  VectorXd pooled(total);
  Eigen::Index at = 0;
  for (const auto& var : summary.variables) {
    pooled.segment(at, var.samples.size()) = var.samples / scale;
    at += var.samples.size();
  }
  const double top = empirical_quantile(pooled, 0.995);
  std::vector<double> grid(static_cast<std::size_t>(config.grid_size));
  for (int i = 0; i < config.grid_size; ++i)
    grid[static_cast<std::size_t>(i)] = top * i / (config.grid_size - 1.0);

  std::ostringstream path_csv;
  path_csv << "feature,s,survival\n";
  for (std::size_t j = 0; j < summary.variables.size(); ++j) {
    const VectorXd normalized = summary.variables[j].samples / scale;
    for (const auto& [s, p] : survival_curve(normalized, grid))
      path_csv << loaded.bundle.schema.names[j] << ',' << format_double(s) << ','
               << format_double(p) << '\n';
  }
  fs::create_directories(config.output);
  write_text_atomic(fs::path(config.output) / "path.csv", path_csv.str());
  std::cout << "path written to " << (fs::path(config.output) / "path.csv").string() << "\n";
  return 0;
}

int cmd_predict(const RunConfig& config, const std::string& model_dir,
                const std::string& out_file) {
  const LoadedData loaded = load_for_scoring(config, model_dir);
  const VectorXd mean = loaded.bundle.model.predict_mean(loaded.x);
  const VectorXd var = loaded.bundle.model.predict_variance(loaded.x);
  std::ostringstream csv;
  csv << "mean,sd\n";
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    csv << format_double(mean[i]) << ',' << format_double(std::sqrt(std::max(0.0, var[i])))
        << '\n';
  const fs::path out =
      out_file.empty() ? fs::path(config.output) / "predictions.csv" : fs::path(out_file);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_text_atomic(out, csv.str());
  std::cout << "predictions written to " << out.string() << "\n";
  return 0;
}

BenchConfig parse_bench_config(const RunConfig& config) {
  BenchConfig bench;
  bench.seed = config.seed;
  bench.threads = config.threads;
  bench.n_trees = config.n_trees;
  bench.max_leaf_nodes = config.max_leaf_nodes;
  bench.candidates_per_split = config.candidates_per_split;
  bench.c_continuous = config.smooth_c_continuous;
  bench.c_discrete = config.smooth_c_discrete;
  bench.rff_dim = config.rff_dim;
  bench.interior_knots = config.interior_knots;
  if (config.noise_variance > 0.0) bench.noise_variance = config.noise_variance;

  const Json& j = config.benchmark;
  if (j.is_null() || !j.contains("f0"))
    throw DimensionError("benchmark requires a grid declaration (config key 'benchmark')");
  const auto f0_names = j.at("f0").get<std::vector<std::string>>();
  const auto feature_names = j.value("features", std::vector<std::string>{"continuous"});
  const auto ns = j.at("n").get<std::vector<int>>();
  const auto ds = j.at("d").get<std::vector<int>>();
  for (const auto& f0 : f0_names)
    for (const auto& fk : feature_names)
      for (const int n : ns)
        for (const int d : ds)
          bench.scenarios.push_back({outcome_from_name(f0), feature_kind_from_name(fk), n, d});
  bench.methods = j.value("methods", std::vector<std::string>{"fdt_forest"});
  bench.repeats = j.value("repeats", 20);
  bench.noisy_test_mse = j.value("noisy_test_mse", false);
  bench.lengthscale_validation_split = j.value("lengthscale_validation_split", false);
  if (j.contains("lengthscale_grid"))
    bench.lengthscale_grid = j["lengthscale_grid"].get<std::vector<double>>();
  return bench;
}

std::vector<BenchResult> read_previous_results(const fs::path& path) {
  std::vector<BenchResult> previous;
  std::ifstream file(path);
  if (!file) return previous;
  std::string line;
  std::getline(file, line);  // header
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string f0, fk, n, d, method, seed, auroc_s, mse_s, time_s;
    std::getline(row, f0, ',');
    std::getline(row, fk, ',');
    std::getline(row, n, ',');
    std::getline(row, d, ',');
    std::getline(row, method, ',');
    std::getline(row, seed, ',');
    std::getline(row, auroc_s, ',');
    std::getline(row, mse_s, ',');
    std::getline(row, time_s, ',');
    BenchResult r;
    r.scenario = {outcome_from_name(f0), feature_kind_from_name(fk), std::stoi(n), std::stoi(d)};
    r.method = method;
    r.seed = std::stoull(seed);
    r.auroc = std::strtod(auroc_s.c_str(), nullptr);
    r.test_mse = std::strtod(mse_s.c_str(), nullptr);
    r.wall_time_s = std::strtod(time_s.c_str(), nullptr);
    previous.push_back(std::move(r));
  }
  return previous;
}

int cmd_benchmark(const RunConfig& config, bool include_timing) {
  const BenchConfig bench = parse_bench_config(config);
  fs::create_directories(config.output);
  const fs::path results_path = fs::path(config.output) / "results.csv";

  // resume: completed cells are keyed by scenario, method and cell seed
  std::vector<BenchResult> previous = read_previous_results(results_path);
  std::set<std::string> completed;
  for (const auto& r : previous) completed.insert(bench_key(r.scenario, r.method, r.seed));

  auto on_result = [&](const BenchResult& r) {
    std::cout << "cell " << bench_key(r.scenario, r.method, r.seed)
              << (r.ok ? " auroc=" + format_double(r.auroc) : " FAILED: " + r.note) << "\n";
  };
  const std::vector<BenchResult> fresh = run_benchmark(bench, completed, on_result);

  std::vector<BenchResult> all = previous;
  all.insert(all.end(), fresh.begin(), fresh.end());
  write_text_atomic(results_path, results_to_csv(all, include_timing));

  Json meta;
  meta["version"] = "0.1.0";
  meta["grid"] = config.benchmark;
  meta["seed"] = config.seed;
  meta["n_trees"] = bench.n_trees;
  meta["max_leaf_nodes"] = bench.max_leaf_nodes;
  meta["candidates_per_split"] = bench.candidates_per_split;
  meta["c_continuous"] = bench.c_continuous;
  meta["c_discrete"] = bench.c_discrete;
  meta["rff_dim"] = bench.rff_dim;
  meta["lengthscale_grid"] = bench.lengthscale_grid;
  meta["interior_knots"] = bench.interior_knots;
  meta["noise_variance"] = bench.noise_variance;
  meta["noisy_test_mse"] = bench.noisy_test_mse;
  meta["mixture_bernoulli_columns"] = {1, 2, 6, 7};  // 1-indexed convention
  meta["resumed_cells"] = static_cast<int>(previous.size());
  write_text_atomic(fs::path(config.output) / "metadata.json", meta.dump(1));

  std::cout << "results written to " << results_path.string() << " (" << fresh.size()
            << " new rows, " << previous.size() << " kept)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty-aware nonlinear variable selection with featurized GPs"};
  app.require_subcommand(1);

  RunConfig config;
  std::string config_path;
  std::string model_dir;
  std::string out_file;
  bool raw_samples = false;
  bool no_timing = false;

  // the config file provides new defaults; command-line flags then override
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
  }
  if (!config_path.empty()) {
    try {
      apply_config_file(config, config_path);
    } catch (const DataError& e) {
      std::cerr << "data error: " << e.what() << "\n";
      return kExitData;
    }
  }

  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", config.seed, "random seed (default 0)");
  app.add_option("--output", config.output, "output directory");
  app.add_option("--threads", config.threads, "worker threads");

  auto add_data_opts = [&](CLI::App* cmd) {
    cmd->add_option("--data", config.dataset, "CSV dataset with a header row");
    cmd->add_option("--target", config.target, "target column name");
  };
  auto add_model_opt = [&](CLI::App* cmd) {
    cmd->add_option("--model", model_dir, "fitted bundle directory (default: --output)");
  };
  auto add_mc_opts = [&](CLI::App* cmd) {
    cmd->add_option("--mc-samples", config.mc_samples, "Monte Carlo draws per variable");
    cmd->add_option("--grid-size", config.grid_size, "survival grid size");
    cmd->add_option("--max-rows", config.max_rows,
                    "row cap for ensemble distribution summaries");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit a featurized-GP model and save the bundle");
  fit->fallthrough();
  add_data_opts(fit);
  fit->add_option("--method", config.method, "fdt_forest | rfnn | additive_basis | ensemble");
  fit->add_option("--n-trees", config.n_trees, "trees in the forest");
  fit->add_option("--max-leaf-nodes", config.max_leaf_nodes,
                  "leaf budget per tree (0: ceil(sqrt(n) ln n))");
  fit->add_option("--candidates-per-split", config.candidates_per_split,
                  "random split candidates per node (0: all features)");
  fit->add_option("--rff-dim", config.rff_dim, "random features (0: ceil(sqrt(n) ln n))");
  fit->add_option("--lengthscale", config.lengthscale, "RBF lengthscale");
  fit->add_option("--lengthscale-grid", config.lengthscale_grid,
                  "candidate lengthscales, selected on a 20% holdout");
  fit->add_option("--knots", config.interior_knots, "interior spline knots per variable");
  fit->add_option("--c-continuous", config.smooth_c_continuous,
                  "sigmoid sharpness for continuous splits");
  fit->add_option("--c-discrete", config.smooth_c_discrete,
                  "sigmoid sharpness for discrete splits");
  fit->add_option("--noise-variance", config.noise_variance,
                  "observation noise variance (0: estimate)");
  fit->add_option("--batch-size", config.batch_size, "posterior accumulation batch size");
  fit->add_option("--prior-center-file", config.prior_center_file,
                  "file with one prior-center value per line (additive_basis)");

  CLI::App* importance =
      app.add_subcommand("importance", "posterior variable importance of a fitted bundle");
  importance->fallthrough();
  add_data_opts(importance);
  add_model_opt(importance);
  add_mc_opts(importance);
  importance->add_flag("--raw-samples", raw_samples, "also write samples.csv");

  CLI::App* path =
      app.add_subcommand("path", "normalized survival curves over a shared threshold grid");
  path->fallthrough();
  add_data_opts(path);
  add_model_opt(path);
  add_mc_opts(path);

  CLI::App* predict = app.add_subcommand("predict", "posterior predictive mean and sd");
  predict->fallthrough();
  add_data_opts(predict);
  add_model_opt(predict);
  predict->add_option("--out", out_file, "output CSV (default: <output>/predictions.csv)");

  CLI::App* benchmark =
      app.add_subcommand("benchmark", "run the synthetic benchmark grid from the config");
  benchmark->fallthrough();
  benchmark->add_flag("--no-timing", no_timing,
                      "zero the wall_time_s column for byte-identical reruns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(config);
    if (importance->parsed()) return cmd_importance(config, model_dir, raw_samples);
    if (path->parsed()) return cmd_path(config, model_dir);
    if (predict->parsed()) return cmd_predict(config, model_dir, out_file);
    if (benchmark->parsed()) return cmd_benchmark(config, !no_timing);
    std::cerr << "no subcommand selected\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
