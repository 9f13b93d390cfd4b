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
#include "psivar/serialize.hpp"

#include <fstream>

namespace psivar {

namespace {

constexpr int kBundleVersion = 1;

Json tree_map_to_json(const SoftTreeMap& map) {
  Json j;
  j["kind"] = "soft_tree";
  j["mode"] = map.mode() == TreeEvalMode::kHard ? "hard" : "soft";
  j["c_continuous"] = map.c_continuous();
  j["c_discrete"] = map.c_discrete();
  j["input_dim"] = map.input_dim();
  j["roles"] = roles_to_json(map.column_roles());
  j["leaves"] = rules_to_json(map.leaves());
  return j;
}

Json rfnn_map_to_json(const RandomFourierMap& map) {
  Json j;
  j["kind"] = "random_fourier";
  j["lengthscale"] = map.lengthscale();
  j["seed"] = map.seed();
  j["roles"] = roles_to_json(map.column_roles());
  j["weights"] = matrix_to_json(map.weights());
  j["phases"] = vector_to_json(map.phases());
  return j;
}

Json additive_map_to_json(const AdditiveBasisMap& map) {
  Json j;
  j["kind"] = "additive_basis";
  j["roles"] = roles_to_json(map.column_roles());
  Json knots = Json::array();
  for (const auto& basis : map.bases()) knots.push_back(vector_to_json(basis.knots()));
  j["knots"] = std::move(knots);
  if (map.prior_center()) j["prior_center"] = vector_to_json(*map.prior_center());
  return j;
}

Json concat_map_to_json(const ConcatenatedMap& map) {
  Json j;
  j["kind"] = "concatenated";
  Json members = Json::array();
  for (const auto& [weight, member] : map.members()) {
    Json entry;
    entry["weight"] = weight;
    entry["map"] = map_to_json(*member);
    members.push_back(std::move(entry));
  }
  j["members"] = std::move(members);
  return j;
}

}  // namespace

Json vector_to_json(const VectorXd& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

VectorXd vector_from_json(const Json& j) {
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Json matrix_to_json(const MatrixXd& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.size();
  const auto cols = rows == 0 ? 0 : j[0].size();
  MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw DataError("ragged matrix in document");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

Json roles_to_json(const std::vector<ColumnSpec>& roles) {
  Json j = Json::array();
  for (const auto& spec : roles) {
    Json entry;
    entry["role"] = role_name(spec.role);
    if (spec.discrete()) entry["levels"] = spec.levels;
    j.push_back(std::move(entry));
  }
  return j;
}

std::vector<ColumnSpec> roles_from_json(const Json& j) {
  std::vector<ColumnSpec> roles;
  roles.reserve(j.size());
  for (const auto& entry : j) {
    ColumnSpec spec;
    spec.role = role_from_name(entry.at("role").get<std::string>());
    if (entry.contains("levels")) spec.levels = entry["levels"].get<std::vector<double>>();
    if (spec.role == ColumnRole::kBinary && spec.levels.empty()) spec.levels = {0.0, 1.0};
    roles.push_back(std::move(spec));
  }
  return roles;
}

Json rules_to_json(const std::vector<LeafRule>& rules) {
  Json j = Json::array();
  for (const auto& rule : rules) {
    Json conditions = Json::array();
    for (const auto& cond : rule)
      conditions.push_back(Json{{"feature", cond.feature},
                                {"threshold", cond.threshold},
                                {"greater", cond.greater}});
    j.push_back(std::move(conditions));
  }
  return j;
}

std::vector<LeafRule> rules_from_json(const Json& j) {
  std::vector<LeafRule> rules;
  rules.reserve(j.size());
  for (const auto& entry : j) {
    LeafRule rule;
    for (const auto& cond : entry)
      rule.push_back({cond.at("feature").get<int>(), cond.at("threshold").get<double>(),
                      cond.at("greater").get<bool>()});
    rules.push_back(std::move(rule));
  }
  return rules;
}

Json map_to_json(const FeatureMap& map) {
  if (const auto* tree = dynamic_cast<const SoftTreeMap*>(&map)) return tree_map_to_json(*tree);
  if (const auto* rfnn = dynamic_cast<const RandomFourierMap*>(&map))
    return rfnn_map_to_json(*rfnn);
  if (const auto* additive = dynamic_cast<const AdditiveBasisMap*>(&map))
    return additive_map_to_json(*additive);
  if (const auto* concat = dynamic_cast<const ConcatenatedMap*>(&map))
    return concat_map_to_json(*concat);
  throw DataError(std::string("cannot serialize feature map kind: ") + map.kind());
}

std::shared_ptr<FeatureMap> map_from_json(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "soft_tree") {
    const auto mode =
        j.at("mode").get<std::string>() == "hard" ? TreeEvalMode::kHard : TreeEvalMode::kSoft;
    return std::make_shared<SoftTreeMap>(rules_from_json(j.at("leaves")),
                                         roles_from_json(j.at("roles")), mode,
                                         j.at("c_continuous").get<double>(),
                                         j.at("c_discrete").get<double>());
  }
  if (kind == "random_fourier") {
    return std::make_shared<RandomFourierMap>(
        matrix_from_json(j.at("weights")), vector_from_json(j.at("phases")),
        j.at("lengthscale").get<double>(), j.at("seed").get<std::uint64_t>(),
        roles_from_json(j.at("roles")));
  }
  if (kind == "additive_basis") {
    std::vector<BSplineBasis> bases;
    for (const auto& knots : j.at("knots")) bases.emplace_back(vector_from_json(knots));
    std::optional<VectorXd> center;
    if (j.contains("prior_center")) center = vector_from_json(j["prior_center"]);
    return std::make_shared<AdditiveBasisMap>(std::move(bases), roles_from_json(j.at("roles")),
                                              std::move(center));
  }
  if (kind == "concatenated") {
    std::vector<ConcatenatedMap::Member> members;
    for (const auto& entry : j.at("members"))
      members.emplace_back(entry.at("weight").get<double>(), map_from_json(entry.at("map")));
    return std::make_shared<ConcatenatedMap>(std::move(members));
  }
  throw DataError("unknown feature map kind in document: " + kind);
}

Json forest_to_json(const ForestModel& forest) {
  Json j;
  j["kind"] = "forest";
  j["seeds"] = forest.seeds;
  Json trees = Json::array();
  for (const auto& tree : forest.trees) trees.push_back(rules_to_json(extract_leaf_rules(tree)));
  j["trees"] = std::move(trees);
  return j;
}

Json posterior_to_json(const WeightPosterior& posterior) {
  Json j;
  j["dim"] = posterior.dim();
  j["mean"] = vector_to_json(posterior.mean);
  j["cov"] = matrix_to_json(posterior.cov);
  return j;
}

WeightPosterior posterior_from_json(const Json& j) {
  WeightPosterior posterior;
  posterior.mean = vector_from_json(j.at("mean"));
  posterior.cov = matrix_from_json(j.at("cov"));
  require(posterior.cov.rows() == posterior.mean.size() &&
              posterior.cov.cols() == posterior.mean.size(),
          "posterior covariance shape must match the mean length");
  return posterior;
}

Json standardizer_to_json(const Standardizer& standardizer) {
  Json j;
  j["offset"] = vector_to_json(standardizer.offset());
  j["scale"] = vector_to_json(standardizer.scale());
  return j;
}

Standardizer standardizer_from_json(const Json& j) {
  return Standardizer(vector_from_json(j.at("offset")), vector_from_json(j.at("scale")));
}

Json schema_to_json(const Schema& schema) {
  Json columns = Json::array();
  for (int i = 0; i < schema.size(); ++i) {
    Json entry;
    entry["name"] = schema.names[i];
    entry["role"] = role_name(schema.roles[i].role);
    if (schema.roles[i].discrete()) entry["levels"] = schema.roles[i].levels;
    columns.push_back(std::move(entry));
  }
  return Json{{"columns", std::move(columns)}};
}

Schema schema_from_json(const Json& j) {
  Schema schema;
  for (const auto& entry : j.at("columns")) {
    schema.names.push_back(entry.at("name").get<std::string>());
    ColumnSpec spec;
    spec.role = role_from_name(entry.at("role").get<std::string>());
    if (entry.contains("levels")) spec.levels = entry["levels"].get<std::vector<double>>();
    if (spec.role == ColumnRole::kBinary && spec.levels.empty()) spec.levels = {0.0, 1.0};
    schema.roles.push_back(std::move(spec));
  }
  return schema;
}

Json model_to_json(const FittedModel& model) {
  Json j;
  j["format"] = "psivar-model";
  j["version"] = kBundleVersion;
  j["method"] = model.method;
  j["sigma2"] = model.sigma2;
  j["seed"] = model.seed;
  j["n_train"] = model.n_train;
  j["log_evidence"] = model.log_evidence;
  j["roles"] = roles_to_json(model.roles);
  Json members = Json::array();
  for (const auto& member : model.members) {
    Json entry;
    entry["weight"] = member.weight;
    entry["map"] = map_to_json(*member.grad_map);
    entry["fit_mode"] = member.fit_map == member.grad_map ? "same" : "hard";
    entry["posterior"] = posterior_to_json(member.posterior);
    members.push_back(std::move(entry));
  }
  j["members"] = std::move(members);
  return j;
}

FittedModel model_from_json(const Json& j) {
  if (j.value("format", "") != "psivar-model") throw DataError("not a model document");
  FittedModel model;
  model.method = j.at("method").get<std::string>();
  model.sigma2 = j.at("sigma2").get<double>();
  model.seed = j.at("seed").get<std::uint64_t>();
  model.n_train = j.value("n_train", 0L);
  model.log_evidence = j.value("log_evidence", 0.0);
  model.roles = roles_from_json(j.at("roles"));
  for (const auto& entry : j.at("members")) {
    ModelMember member;
    member.weight = entry.at("weight").get<double>();
    auto grad = map_from_json(entry.at("map"));
    member.grad_map = grad;
    if (entry.at("fit_mode").get<std::string>() == "hard") {
      const auto* tree = dynamic_cast<const SoftTreeMap*>(grad.get());
      if (tree == nullptr) throw DataError("hard fit mode requires a tree map");
      member.fit_map = tree->with_mode(TreeEvalMode::kHard);
    } else {
      member.fit_map = grad;
    }
    member.posterior = posterior_from_json(entry.at("posterior"));
    require(member.posterior.dim() == member.grad_map->output_dim(),
            "posterior dimension must match the member map");
    model.members.push_back(std::move(member));
  }
  require(!model.members.empty(), "model document has no members");
  return model;
}

Json bundle_to_json(const ModelBundle& bundle) {
  Json j;
  j["format"] = "psivar-bundle";
  j["version"] = kBundleVersion;
  j["target"] = bundle.target;
  j["schema"] = schema_to_json(bundle.schema);
  j["standardizer"] = standardizer_to_json(bundle.standardizer);
  j["model"] = model_to_json(bundle.model);
  return j;
}

ModelBundle bundle_from_json(const Json& j) {
  if (j.value("format", "") != "psivar-bundle") throw DataError("not a bundle document");
  ModelBundle bundle;
  bundle.target = j.at("target").get<std::string>();
  bundle.schema = schema_from_json(j.at("schema"));
  bundle.standardizer = standardizer_from_json(j.at("standardizer"));
  bundle.model = model_from_json(j.at("model"));
  return bundle;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  write_text_atomic(directory / "model.json", bundle_to_json(bundle).dump(1));
}

ModelBundle load_bundle(const std::filesystem::path& directory) {
  const auto path = directory / "model.json";
  std::ifstream file(path);
  if (!file) throw DataError("cannot open bundle: " + path.string());
  Json j;
  try {
    file >> j;
  } catch (const Json::exception& e) {
    throw DataError("malformed bundle document: " + std::string(e.what()));
  }
  return bundle_from_json(j);
}

}  // namespace psivar
