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
#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "psivar/tree.hpp"

using namespace psivar;

namespace {

struct RandomRegression {
  MatrixXd x;
  VectorXd y;
};

RandomRegression make_data(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-2.0, 2.0);
  std::normal_distribution<double> gauss(0.0, 0.1);
  RandomRegression data;
  data.x.resize(n, d);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < data.x.size(); ++i) data.x.data()[i] = uniform(rng);
  for (int i = 0; i < n; ++i)
    data.y[i] = std::sin(data.x(i, 0)) + 0.5 * data.x(i, 1 % d) + gauss(rng);
  return data;
}

// within-leaf sum of squared errors around leaf means, by actual assignment
double total_sse(const TreeModel& tree, const MatrixXd& x, const VectorXd& y) {
  std::map<int, std::pair<double, std::vector<double>>> leaves;
  std::vector<int> assignment(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int node = 0;
    while (!tree.nodes()[node].is_leaf())
      node = x(i, tree.nodes()[node].feature) <= tree.nodes()[node].threshold
                 ? tree.nodes()[node].left
                 : tree.nodes()[node].right;
    leaves[node].second.push_back(y[i]);
  }
  double sse = 0.0;
  for (auto& [node, bucket] : leaves) {
    double mean = 0.0;
    for (const double v : bucket.second) mean += v;
    mean /= static_cast<double>(bucket.second.size());
    for (const double v : bucket.second) sse += (v - mean) * (v - mean);
  }
  return sse;
}

bool same_tree(const TreeModel& a, const TreeModel& b) {
  if (a.nodes().size() != b.nodes().size()) return false;
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    const auto& na = a.nodes()[i];
    const auto& nb = b.nodes()[i];
    if (na.feature != nb.feature || na.threshold != nb.threshold || na.left != nb.left ||
        na.right != nb.right || na.value != nb.value)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("two points force a single split") {
  MatrixXd x(2, 1);
  x << 0.0, 1.0;
  VectorXd y(2);
  y << 0.0, 10.0;
  auto rng = make_rng(1);
  const TreeModel tree = fit_extra_tree(x, y, {.max_leaf_nodes = 2}, rng);
  CHECK(tree.leaf_count() == 2);
  CHECK(tree.nodes()[0].feature == 0);
  CHECK(tree.predict(x.row(0)) == 0.0);
  CHECK(tree.predict(x.row(1)) == 10.0);
}

TEST_CASE("constant targets grow a single leaf") {
  const auto data = make_data(50, 3, 2);
  const VectorXd constant = VectorXd::Constant(50, 4.2);
  auto rng = make_rng(3);
  const TreeModel tree = fit_extra_tree(data.x, constant, {.max_leaf_nodes = 16}, rng);
  CHECK(tree.leaf_count() == 1);
  CHECK(tree.predict(data.x.row(7)) == doctest::Approx(4.2));
}

TEST_CASE("default leaf budget follows ceil(sqrt(n) ln n)") {
  CHECK(default_max_leaf_nodes(500) == 139);
  CHECK(default_max_leaf_nodes(100) == 47);
  CHECK(default_max_leaf_nodes(200) == 75);
  CHECK(default_max_leaf_nodes(1000) == 219);
  CHECK(default_max_leaf_nodes(1) == 2);
}

TEST_CASE("tiny datasets are rejected") {
  MatrixXd x(1, 2);
  x << 0.0, 1.0;
  VectorXd y(1);
  y << 1.0;
  auto rng = make_rng(4);
  CHECK_THROWS_AS(fit_extra_tree(x, y, {.max_leaf_nodes = 4}, rng), DataError);
}

TEST_CASE("leaf rules of the worked three-leaf tree") {
  std::vector<TreeNode> nodes(5);
  nodes[0] = {1, 2.3, 1, 2, 0.0};
  nodes[1] = {-1, 0.0, -1, -1, 1.0};
  nodes[2] = {0, 7.1, 3, 4, 0.0};
  nodes[3] = {-1, 0.0, -1, -1, 2.0};
  nodes[4] = {-1, 0.0, -1, -1, 3.0};
  const TreeModel tree(std::move(nodes));
  const auto rules = extract_leaf_rules(tree);
  REQUIRE(rules.size() == 3);
  // {x2 <= 2.3}
  REQUIRE(rules[0].size() == 1);
  CHECK(rules[0][0].feature == 1);
  CHECK(rules[0][0].threshold == 2.3);
  CHECK_FALSE(rules[0][0].greater);
  // {x2 > 2.3 and x1 <= 7.1}
  REQUIRE(rules[1].size() == 2);
  CHECK(rules[1][0].greater);
  CHECK(rules[1][1].feature == 0);
  CHECK(rules[1][1].threshold == 7.1);
  CHECK_FALSE(rules[1][1].greater);
  // {x2 > 2.3 and x1 > 7.1}
  REQUIRE(rules[2].size() == 2);
  CHECK(rules[2][1].greater);
}

TEST_CASE("single-leaf trees export one empty rule") {
  std::vector<TreeNode> nodes = {{-1, 0.0, -1, -1, 3.0}};
  const auto rules = extract_leaf_rules(TreeModel(std::move(nodes)));
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].empty());
}

TEST_CASE("every point satisfies exactly one extracted rule") {
  const auto data = make_data(300, 5, 6);
  auto rng = make_rng(7);
  const TreeModel tree = fit_extra_tree(data.x, data.y, {.max_leaf_nodes = 40}, rng);
  const auto rules = extract_leaf_rules(tree);
  CHECK(static_cast<int>(rules.size()) == tree.leaf_count());
  std::mt19937_64 probe_rng(8);
  std::uniform_real_distribution<double> uniform(-3.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    VectorXd p(5);
    for (int j = 0; j < 5; ++j) p[j] = uniform(probe_rng);
    int hits = 0;
    for (const auto& rule : rules) {
      bool inside = true;
      for (const auto& cond : rule) inside = inside && cond.satisfied(p[cond.feature]);
      hits += inside ? 1 : 0;
    }
    CHECK(hits == 1);
  }
}

TEST_CASE("best-first growth never increases within-leaf variance") {
  const auto data = make_data(240, 4, 9);
  double previous = std::numeric_limits<double>::infinity();
  for (int leaves = 2; leaves <= 32; leaves *= 2) {
    auto rng = make_rng(10);
    const TreeModel tree = fit_extra_tree(data.x, data.y, {.max_leaf_nodes = leaves}, rng);
    const double sse = total_sse(tree, data.x, data.y);
    CHECK(sse <= previous + 1e-9);
    previous = sse;
  }
}

TEST_CASE("identical seeds grow identical trees") {
  const auto data = make_data(150, 4, 11);
  auto rng_a = make_rng(12);
  auto rng_b = make_rng(12);
  const TreeModel a = fit_extra_tree(data.x, data.y, {.max_leaf_nodes = 25}, rng_a);
  const TreeModel b = fit_extra_tree(data.x, data.y, {.max_leaf_nodes = 25}, rng_b);
  CHECK(same_tree(a, b));
}

TEST_CASE("singleton forests reduce to a single tree fit") {
  const auto data = make_data(120, 3, 13);
  const ForestModel forest = fit_forest(data.x, data.y, 1, {.max_leaf_nodes = 20}, 99);
  REQUIRE(forest.trees.size() == 1);
  auto rng = std::mt19937_64(forest.seeds[0]);
  const TreeModel reference = fit_extra_tree(data.x, data.y, {.max_leaf_nodes = 20}, rng);
  CHECK(same_tree(forest.trees[0], reference));
}

TEST_CASE("forests are reproducible and thread-count independent") {
  const auto data = make_data(160, 4, 14);
  const ForestModel a = fit_forest(data.x, data.y, 8, {.max_leaf_nodes = 15}, 5, 1);
  const ForestModel b = fit_forest(data.x, data.y, 8, {.max_leaf_nodes = 15}, 5, 4);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t m = 0; m < a.trees.size(); ++m) CHECK(same_tree(a.trees[m], b.trees[m]));
  // distinct derived seeds
  for (std::size_t i = 0; i < a.seeds.size(); ++i)
    for (std::size_t j = i + 1; j < a.seeds.size(); ++j) CHECK(a.seeds[i] != a.seeds[j]);
}

TEST_CASE("forest prediction averages the member trees") {
  const auto data = make_data(100, 3, 15);
  const ForestModel forest = fit_forest(data.x, data.y, 5, {.max_leaf_nodes = 10}, 17);
  const VectorXd p = data.x.row(3);
  double manual = 0.0;
  for (const auto& tree : forest.trees) manual += tree.predict(p);
  CHECK(forest.predict(p) == doctest::Approx(manual / 5.0));
}

TEST_CASE("candidate budget restricts the feature pool") {
  // with one candidate per split the learner still produces a valid tree
  const auto data = make_data(200, 6, 16);
  auto rng = make_rng(18);
  const TreeModel tree =
      fit_extra_tree(data.x, data.y, {.max_leaf_nodes = 12, .candidates_per_split = 1}, rng);
  CHECK(tree.leaf_count() > 1);
  CHECK(tree.leaf_count() <= 12);
}
