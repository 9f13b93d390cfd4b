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
#ifndef PSIVAR_COMMON_HPP
#define PSIVAR_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace psivar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Mismatched shapes or indices in a call (maps to CLI usage errors).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (maps to CLI data errors).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization or other floating-point failure (maps to CLI numerical errors).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ColumnRole { kContinuous, kBinary, kCategorical };

/// Per-variable role declaration. Discrete roles carry the admissible level
/// set used by contrast evaluation; binary defaults to {0, 1}.
struct ColumnSpec {
  ColumnRole role = ColumnRole::kContinuous;
  std::vector<double> levels;

  bool discrete() const { return role != ColumnRole::kContinuous; }

  static ColumnSpec continuous() { return {}; }
  static ColumnSpec binary() { return {ColumnRole::kBinary, {0.0, 1.0}}; }
  static ColumnSpec categorical(std::vector<double> lv) {
    return {ColumnRole::kCategorical, std::move(lv)};
  }
};

std::string role_name(ColumnRole role);
ColumnRole role_from_name(const std::string& name);

/// All-continuous role vector of length d.
std::vector<ColumnSpec> continuous_roles(int d);

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic child stream: mixes (seed, stream) so sibling streams are
/// independent of draw order in the parent.
inline std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x51ed2700a1b3c64dULL)));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

void require(bool condition, const std::string& message);

}  // namespace psivar

#endif  // PSIVAR_COMMON_HPP
