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
#ifndef PSIVAR_DATASET_HPP
#define PSIVAR_DATASET_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "psivar/common.hpp"

namespace psivar {

/// Numeric table parsed from CSV: comma separated, header required, UTF-8,
/// decimal point, every value a 64-bit float.
struct DataTable {
  std::vector<std::string> columns;
  MatrixXd values;

  int column_index(const std::string& name) const;  // -1 when absent
};

DataTable read_csv(const std::filesystem::path& path);

/// Writes lines to a temporary file in the same directory, then renames.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// Feature schema: names and roles for the feature columns, in order.
struct Schema {
  std::vector<std::string> names;
  std::vector<ColumnSpec> roles;

  int size() const { return static_cast<int>(names.size()); }
};

/// Splits a table into features (schema order) and the target column.
struct SplitData {
  MatrixXd x;
  VectorXd y;
};
SplitData split_features(const DataTable& table, const Schema& schema,
                         const std::string& target);

/// Extracts feature columns only (prediction-time tables may omit the target).
MatrixXd feature_matrix(const DataTable& table, const Schema& schema);

/// Mean-zero, unit-sd scaling of continuous columns; discrete columns pass
/// through. Statistics are fit-time state and never recomputed downstream.
class Standardizer {
 public:
  Standardizer() = default;

  static Standardizer fit(const Eigen::Ref<const MatrixXd>& x,
                          const std::vector<ColumnSpec>& roles);
  static Standardizer identity(int dim);

  MatrixXd transform(const Eigen::Ref<const MatrixXd>& x) const;

  const VectorXd& offset() const { return offset_; }
  const VectorXd& scale() const { return scale_; }

  Standardizer(VectorXd offset, VectorXd scale);

 private:
  VectorXd offset_;
  VectorXd scale_;
};

/// Validates that every value of each discrete column belongs to the
/// declared level set; throws DataError otherwise.
void check_discrete_levels(const Eigen::Ref<const MatrixXd>& x,
                           const std::vector<ColumnSpec>& roles,
                           const std::vector<std::string>& names);

std::string format_double(double value);  // shortest exact decimal form

}  // namespace psivar

#endif  // PSIVAR_DATASET_HPP
