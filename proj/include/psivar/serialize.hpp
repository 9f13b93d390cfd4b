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
#ifndef PSIVAR_SERIALIZE_HPP
#define PSIVAR_SERIALIZE_HPP

#include <memory>

#include <json.hpp>

#include "psivar/dataset.hpp"
#include "psivar/feature_map.hpp"
#include "psivar/model.hpp"
#include "psivar/posterior.hpp"
#include "psivar/tree.hpp"

namespace psivar {

using Json = nlohmann::json;

// JSON doubles go through shortest-round-trip formatting, so every value
// survives serialization bit-exactly.

Json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const Json& j);
Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j);

Json roles_to_json(const std::vector<ColumnSpec>& roles);
std::vector<ColumnSpec> roles_from_json(const Json& j);

Json map_to_json(const FeatureMap& map);
std::shared_ptr<FeatureMap> map_from_json(const Json& j);

Json rules_to_json(const std::vector<LeafRule>& rules);
std::vector<LeafRule> rules_from_json(const Json& j);

/// Leaf rules and seeds only; enough to rebuild the tree feature maps.
Json forest_to_json(const ForestModel& forest);

Json posterior_to_json(const WeightPosterior& posterior);
WeightPosterior posterior_from_json(const Json& j);

Json standardizer_to_json(const Standardizer& standardizer);
Standardizer standardizer_from_json(const Json& j);

Json schema_to_json(const Schema& schema);
Schema schema_from_json(const Json& j);

Json model_to_json(const FittedModel& model);
FittedModel model_from_json(const Json& j);

/// Full fit bundle: model, schema, standardization statistics and target.
struct ModelBundle {
  FittedModel model;
  Schema schema;
  Standardizer standardizer;
  std::string target;
};

Json bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const Json& j);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& directory);
ModelBundle load_bundle(const std::filesystem::path& directory);

}  // namespace psivar

#endif  // PSIVAR_SERIALIZE_HPP
