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
#ifndef PSIVAR_TREE_HPP
#define PSIVAR_TREE_HPP

#include <memory>
#include <vector>

#include "psivar/common.hpp"
#include "psivar/feature_map.hpp"

namespace psivar {

struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // node mean of y

  bool is_leaf() const { return left < 0; }
};

/// Binary regression tree; node 0 is the root. Immutable once fitted.
class TreeModel {
 public:
  TreeModel() = default;
  explicit TreeModel(std::vector<TreeNode> nodes);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int leaf_count() const { return leaf_count_; }

  double predict(const Eigen::Ref<const VectorXd>& x) const;

 private:
  std::vector<TreeNode> nodes_;
  int leaf_count_ = 0;
};

struct TreeConfig {
  int max_leaf_nodes = 0;        // 0: ceil(sqrt(n) * ln n)
  int candidates_per_split = 0;  // 0: one random threshold per feature, all features
  int min_samples_split = 2;
};

/// ceil(sqrt(n) * ln(n)), floored at 2.
int default_max_leaf_nodes(int n);

/// Extremely randomized regression tree with best-first leaf growth: the
/// frontier leaf with the largest variance-reduction gain is split first;
/// candidate splits draw a uniform-random threshold inside the node's range
/// of a randomly ordered feature. Gain ties break toward the older leaf.
TreeModel fit_extra_tree(const Eigen::Ref<const MatrixXd>& x,
                         const Eigen::Ref<const VectorXd>& y, const TreeConfig& config,
                         std::mt19937_64& rng);

struct ForestModel {
  std::vector<TreeModel> trees;
  std::vector<std::uint64_t> seeds;

  double predict(const Eigen::Ref<const VectorXd>& x) const;
};

/// n_trees independent extra trees on the full data, one derived RNG stream
/// per tree; results do not depend on the thread count.
ForestModel fit_forest(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                       int n_trees, const TreeConfig& config, std::uint64_t seed,
                       int threads = 1);

/// One rule per leaf: the conjunction of split conditions along its root
/// path, in depth-first (left first) leaf order. Rules partition the space.
std::vector<LeafRule> extract_leaf_rules(const TreeModel& tree);

/// Leaf-membership feature map of a fitted tree.
std::shared_ptr<SoftTreeMap> tree_feature_map(const TreeModel& tree,
                                              std::vector<ColumnSpec> roles, TreeEvalMode mode,
                                              double c_continuous = 1.0,
                                              double c_discrete = 0.1);

}  // namespace psivar

#endif  // PSIVAR_TREE_HPP
