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
#include "psivar/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace psivar {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& field, std::size_t row, std::size_t col) {
  const std::string text = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                    ": cannot parse '" + text + "' as a number");
  return value;
}

}  // namespace

int DataTable::column_index(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

DataTable read_csv(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open file: " + path.string());
  std::string line;
  if (!std::getline(file, line)) throw DataError("empty file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  DataTable table;
  for (const auto& name : split_line(line)) table.columns.push_back(trim(name));
  const std::size_t width = table.columns.size();
  if (width == 0) throw DataError("header row has no columns: " + path.string());

  std::vector<double> cells;
  std::size_t rows = 0;
  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != width)
      throw DataError(path.string() + ": row " + std::to_string(rows + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(width));
    for (std::size_t c = 0; c < width; ++c)
      cells.push_back(parse_double(fields[c], rows + 1, c));
    ++rows;
  }
  table.values.resize(rows, width);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c) table.values(r, c) = cells[r * width + c];
  return table;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot write file: " + tmp.string());
    file << content;
  }
  std::filesystem::rename(tmp, path);
}

SplitData split_features(const DataTable& table, const Schema& schema,
                         const std::string& target) {
  const int target_idx = table.column_index(target);
  if (target_idx < 0) throw DataError("target column '" + target + "' not found");
  SplitData out;
  out.y = table.values.col(target_idx);
  out.x = feature_matrix(table, schema);
  return out;
}

MatrixXd feature_matrix(const DataTable& table, const Schema& schema) {
  MatrixXd x(table.values.rows(), schema.size());
  for (int j = 0; j < schema.size(); ++j) {
    const int idx = table.column_index(schema.names[j]);
    if (idx < 0) throw DataError("feature column '" + schema.names[j] + "' not found");
    x.col(j) = table.values.col(idx);
  }
  return x;
}

Standardizer::Standardizer(VectorXd offset, VectorXd scale)
    : offset_(std::move(offset)), scale_(std::move(scale)) {
  require(offset_.size() == scale_.size(), "offset and scale lengths must match");
}

Standardizer Standardizer::identity(int dim) {
  return Standardizer(VectorXd::Zero(dim), VectorXd::Ones(dim));
}

Standardizer Standardizer::fit(const Eigen::Ref<const MatrixXd>& x,
                               const std::vector<ColumnSpec>& roles) {
  require(static_cast<Eigen::Index>(roles.size()) == x.cols(), "one role per column required");
  const auto d = x.cols();
  VectorXd offset = VectorXd::Zero(d);
  VectorXd scale = VectorXd::Ones(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (roles[static_cast<std::size_t>(j)].discrete()) continue;
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().sum() /
                       std::max<double>(1.0, static_cast<double>(x.rows()) - 1.0);
    offset[j] = mean;
    scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return Standardizer(std::move(offset), std::move(scale));
}

MatrixXd Standardizer::transform(const Eigen::Ref<const MatrixXd>& x) const {
  require(x.cols() == offset_.size(), "column count does not match the stored statistics");
  return (x.rowwise() - offset_.transpose()).array().rowwise() /
         scale_.transpose().array();
}

void check_discrete_levels(const Eigen::Ref<const MatrixXd>& x,
                           const std::vector<ColumnSpec>& roles,
                           const std::vector<std::string>& names) {
  for (std::size_t j = 0; j < roles.size(); ++j) {
    if (!roles[j].discrete()) continue;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, static_cast<Eigen::Index>(j));
      if (std::find(roles[j].levels.begin(), roles[j].levels.end(), v) ==
          roles[j].levels.end())
        throw DataError("column '" + (j < names.size() ? names[j] : std::to_string(j)) +
                        "', row " + std::to_string(i + 1) + ": value " + format_double(v) +
                        " is not a declared level");
    }
  }
}

std::string format_double(double value) {
  char buffer[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof(buffer), "%.*g", precision, value);
    if (std::strtod(buffer, nullptr) == value) break;
  }
  return buffer;
}

}  // namespace psivar
