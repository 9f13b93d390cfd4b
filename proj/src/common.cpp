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
#include "psivar/common.hpp"

namespace psivar {

std::string role_name(ColumnRole role) {
  switch (role) {
    case ColumnRole::kContinuous:
      return "continuous";
    case ColumnRole::kBinary:
      return "binary";
    case ColumnRole::kCategorical:
      return "categorical";
  }
  return "continuous";
}

ColumnRole role_from_name(const std::string& name) {
  if (name == "continuous") return ColumnRole::kContinuous;
  if (name == "binary") return ColumnRole::kBinary;
  if (name == "categorical") return ColumnRole::kCategorical;
  throw DataError("unknown column role: " + name);
}

std::vector<ColumnSpec> continuous_roles(int d) {
  return std::vector<ColumnSpec>(static_cast<std::size_t>(d), ColumnSpec::continuous());
}

void require(bool condition, const std::string& message) {
  if (!condition) throw DimensionError(message);
}

}  // namespace psivar
