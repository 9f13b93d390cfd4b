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
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "psivar/benchmark.hpp"
#include "psivar/dataset.hpp"
#include "psivar/model.hpp"
#include "psivar/serialize.hpp"

namespace py = pybind11;
using namespace psivar;

namespace {

std::vector<ColumnSpec> roles_from_strings(const std::vector<std::string>& names,
                                           const std::map<int, std::vector<double>>& levels) {
  std::vector<ColumnSpec> roles;
  roles.reserve(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    ColumnSpec spec;
    spec.role = role_from_name(names[j]);
    const auto it = levels.find(static_cast<int>(j));
    if (it != levels.end()) spec.levels = it->second;
    if (spec.role == ColumnRole::kBinary && spec.levels.empty()) spec.levels = {0.0, 1.0};
    roles.push_back(std::move(spec));
  }
  return roles;
}

py::dict summary_to_dict(const ImportanceSummary& summary) {
  py::list variables;
  for (const auto& var : summary.variables) {
    py::dict entry;
    entry["variable"] = var.variable;
    entry["mean"] = var.mean;
    entry["variance"] = var.variance;
    entry["sd"] = var.sd;
    entry["q05"] = var.q05;
    entry["q50"] = var.q50;
    entry["q95"] = var.q95;
    entry["rank"] = var.rank;
    entry["normalized_mean"] = var.normalized_mean;
    if (var.samples.size() > 0) entry["samples"] = VectorXd(var.samples);
    variables.append(entry);
  }
  py::dict out;
  out["variables"] = variables;
  out["survival_grid"] = summary.survival_grid;
  out["survival"] = MatrixXd(summary.survival);
  return out;
}

}  // namespace

PYBIND11_MODULE(_psivar, m) {
  m.doc() = "featurized Gaussian-process variable selection";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<FeatureMap, std::shared_ptr<FeatureMap>>(m, "FeatureMap")
      .def_property_readonly("input_dim", &FeatureMap::input_dim)
      .def_property_readonly("output_dim", &FeatureMap::output_dim)
      .def_property_readonly("kind", &FeatureMap::kind)
      .def("evaluate", &FeatureMap::evaluate, py::arg("x"))
      .def("partial", &FeatureMap::partial, py::arg("x"), py::arg("variable"))
      .def("contrast", &FeatureMap::contrast, py::arg("x"), py::arg("variable"),
           py::arg("level_a"), py::arg("level_b"))
      .def("evaluate_batch", &FeatureMap::evaluate_batch, py::arg("x"))
      .def("to_json", [](const FeatureMap& map) { return map_to_json(map).dump(); });

  m.def(
      "random_fourier_map",
      [](int input_dim, int n_features, double lengthscale, std::uint64_t seed)
          -> std::shared_ptr<FeatureMap> {
        return std::make_shared<RandomFourierMap>(input_dim, n_features, lengthscale, seed);
      },
      py::arg("input_dim"), py::arg("n_features"), py::arg("lengthscale"), py::arg("seed") = 0);
  m.def(
      "map_from_json",
      [](const std::string& text) { return map_from_json(Json::parse(text)); },
      py::arg("text"));

  py::class_<WeightPosterior>(m, "WeightPosterior")
      .def_readonly("mean", &WeightPosterior::mean)
      .def_readonly("cov", &WeightPosterior::cov)
      .def("sample", [](const WeightPosterior& post, int k, std::uint64_t seed) {
        auto rng = make_rng(seed);
        return post.sample(k, rng);
      });

  py::class_<PosteriorAccumulator>(m, "PosteriorAccumulator")
      .def(py::init([](int dim, double noise_variance, const std::string& mode,
                       std::optional<VectorXd> prior_mean) {
             return PosteriorAccumulator(
                 dim, noise_variance,
                 mode == "woodbury" ? AccumulatorMode::kWoodbury : AccumulatorMode::kPrecision,
                 prior_mean.value_or(VectorXd()));
           }),
           py::arg("dim"), py::arg("noise_variance"), py::arg("mode") = "precision",
           py::arg("prior_mean") = std::nullopt)
      .def("accumulate", &PosteriorAccumulator::accumulate, py::arg("phi"), py::arg("y"))
      .def("finalize", &PosteriorAccumulator::finalize)
      .def("log_evidence", &PosteriorAccumulator::log_evidence)
      .def_property_readonly("sample_count", &PosteriorAccumulator::sample_count);

  py::class_<GpPrediction>(m, "GpPrediction")
      .def_readonly("mean", &GpPrediction::mean)
      .def_readonly("cov", &GpPrediction::cov);

  m.def("predict", &predict, py::arg("posterior"), py::arg("phi_star"));
  m.def("dual_gp_posterior", &dual_gp_posterior, py::arg("k_train"), py::arg("k_cross"),
        py::arg("k_test"), py::arg("y"), py::arg("noise_variance"),
        py::arg("prior_mean_train") = std::nullopt, py::arg("prior_mean_test") = std::nullopt);
  m.def("estimate_noise_variance", &estimate_noise_variance, py::arg("phi"), py::arg("y"));

  py::class_<FittedModel>(m, "FittedModel")
      .def_readonly("method", &FittedModel::method)
      .def_readonly("sigma2", &FittedModel::sigma2)
      .def_readonly("log_evidence", &FittedModel::log_evidence)
      .def_property_readonly("n_members",
                             [](const FittedModel& model) { return model.members.size(); })
      .def_property_readonly("total_output_dim", &FittedModel::total_output_dim)
      .def("predict_mean", &FittedModel::predict_mean, py::arg("x"))
      .def("predict_variance", &FittedModel::predict_variance, py::arg("x"))
      .def("to_json", [](const FittedModel& model) { return model_to_json(model).dump(); });

  m.def(
      "model_from_json",
      [](const std::string& text) { return model_from_json(Json::parse(text)); },
      py::arg("text"));

  m.def(
      "fit_fdt_forest",
      [](const MatrixXd& x, const VectorXd& y, const std::vector<std::string>& roles,
         const std::map<int, std::vector<double>>& levels, int n_trees, int max_leaf_nodes,
         int candidates_per_split, double c_continuous, double c_discrete,
         double noise_variance, std::uint64_t seed, int threads) {
        FdtOptions options;
        options.n_trees = n_trees;
        options.max_leaf_nodes = max_leaf_nodes;
        options.candidates_per_split = candidates_per_split;
        options.c_continuous = c_continuous;
        options.c_discrete = c_discrete;
        FitOptions fit;
        fit.noise_variance = noise_variance;
        fit.threads = threads;
        return fit_fdt_forest(x, y, roles_from_strings(roles, levels), options, seed, fit);
      },
      py::arg("x"), py::arg("y"), py::arg("roles") = std::vector<std::string>{},
      py::arg("levels") = std::map<int, std::vector<double>>{}, py::arg("n_trees") = 50,
      py::arg("max_leaf_nodes") = 0, py::arg("candidates_per_split") = 0,
      py::arg("c_continuous") = 1.0, py::arg("c_discrete") = 0.1,
      py::arg("noise_variance") = 0.0, py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "fit_rfnn",
      [](const MatrixXd& x, const VectorXd& y, const std::vector<std::string>& roles,
         const std::map<int, std::vector<double>>& levels, int n_features, double lengthscale,
         double noise_variance, std::uint64_t seed) {
        RfnnOptions options;
        options.n_features = n_features;
        options.lengthscale = lengthscale;
        FitOptions fit;
        fit.noise_variance = noise_variance;
        return fit_rfnn(x, y, roles_from_strings(roles, levels), options, seed, fit);
      },
      py::arg("x"), py::arg("y"), py::arg("roles") = std::vector<std::string>{},
      py::arg("levels") = std::map<int, std::vector<double>>{}, py::arg("n_features") = 0,
      py::arg("lengthscale") = 10.0, py::arg("noise_variance") = 0.0, py::arg("seed") = 0);

  m.def(
      "fit_additive",
      [](const MatrixXd& x, const VectorXd& y, const std::vector<std::string>& roles,
         const std::map<int, std::vector<double>>& levels, int interior_knots,
         std::optional<VectorXd> prior_center, double noise_variance, std::uint64_t seed) {
        AdditiveOptions options;
        options.interior_knots = interior_knots;
        if (prior_center) options.prior_center = *prior_center;
        FitOptions fit;
        fit.noise_variance = noise_variance;
        return fit_additive(x, y, roles_from_strings(roles, levels), options, seed, fit);
      },
      py::arg("x"), py::arg("y"), py::arg("roles") = std::vector<std::string>{},
      py::arg("levels") = std::map<int, std::vector<double>>{}, py::arg("interior_knots") = 10,
      py::arg("prior_center") = std::nullopt, py::arg("noise_variance") = 0.0,
      py::arg("seed") = 0);

  m.def(
      "importance",
      [](const FittedModel& model, const MatrixXd& x, const std::string& mode, int mc_samples,
         int grid_size, bool keep_samples, long max_rows, std::uint64_t seed) {
        ModelImportanceOptions options;
        options.mode = mode == "means"     ? ImportanceMode::kMeans
                       : mode == "moments" ? ImportanceMode::kMoments
                                           : ImportanceMode::kFull;
        options.mc_samples = mc_samples;
        options.grid_size = grid_size;
        options.keep_samples = keep_samples;
        options.max_rows = max_rows;
        auto rng = make_rng(seed);
        return summary_to_dict(model_importance(model, x, options, rng));
      },
      py::arg("model"), py::arg("x"), py::arg("mode") = "full", py::arg("mc_samples") = 1000,
      py::arg("grid_size") = 200, py::arg("keep_samples") = false, py::arg("max_rows") = 2000,
      py::arg("seed") = 0);
  m.def("importance_means", &model_importance_means, py::arg("model"), py::arg("x"));

  m.def(
      "generate_synthetic",
      [](const std::string& f0, const std::string& features, int n_train, int n_test, int dim,
         double noise_variance, double lengthscale, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.f0 = outcome_from_name(f0);
        spec.features = feature_kind_from_name(features);
        spec.n_train = n_train;
        spec.n_test = n_test;
        spec.dim = dim;
        spec.noise_variance = noise_variance;
        spec.lengthscale = lengthscale;
        spec.seed = seed;
        const SyntheticData data = generate_synthetic(spec);
        py::dict out;
        out["x_train"] = data.x_train;
        out["x_test"] = data.x_test;
        out["y_train"] = data.y_train;
        out["y_test"] = data.y_test;
        out["f_train"] = data.f_train;
        out["f_test"] = data.f_test;
        out["discrete_columns"] = data.discrete_columns;
        out["causal_mask"] = data.causal_mask;
        return out;
      },
      py::arg("f0") = "linear", py::arg("features") = "continuous", py::arg("n_train") = 100,
      py::arg("n_test") = 0, py::arg("dim") = 25, py::arg("noise_variance") = 0.01,
      py::arg("lengthscale") = 1.0, py::arg("seed") = 0);

  m.def("auroc", &auroc, py::arg("scores"), py::arg("causal_mask"));
  m.def("default_max_leaf_nodes", &default_max_leaf_nodes, py::arg("n"));
}
