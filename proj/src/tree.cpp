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
#include "psivar/tree.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <queue>

namespace psivar {

namespace {

struct CandidateSplit {
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  double threshold = 0.0;
};

// Frontier leaf pending a possible split. Sample indices live in a shared
// index buffer, range [begin, end).
struct FrontierLeaf {
  int node = 0;
  int begin = 0;
  int end = 0;
  CandidateSplit split;
  int order = 0;  // creation order, used for deterministic tie-breaking
};

struct GainOrder {
  bool operator()(const FrontierLeaf& a, const FrontierLeaf& b) const {
    if (a.split.gain != b.split.gain) return a.split.gain < b.split.gain;
    return a.order > b.order;  // older leaf wins ties
  }
};

// Best candidate among k randomly ordered features, one uniform threshold
// each. k == 0 scores every feature.
CandidateSplit draw_split(const Eigen::Ref<const MatrixXd>& x,
                          const Eigen::Ref<const VectorXd>& y, const std::vector<int>& idx,
                          int begin, int end, int candidates, std::mt19937_64& rng) {
  CandidateSplit best;
  const int d = static_cast<int>(x.cols());
  const int n = end - begin;
  if (n < 2) return best;

  double sum = 0.0, sumsq = 0.0;
  for (int i = begin; i < end; ++i) {
    const double v = y[idx[i]];
    sum += v;
    sumsq += v * v;
  }
  const double parent_sse = sumsq - sum * sum / n;
  if (parent_sse <= 1e-12 * std::max(1.0, sumsq / n)) return best;  // pure node

  std::vector<int> features(d);
  std::iota(features.begin(), features.end(), 0);
  std::shuffle(features.begin(), features.end(), rng);
  const int k = candidates <= 0 ? d : std::min(candidates, d);

  for (int c = 0; c < k; ++c) {
    const int feature = features[c];
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = begin; i < end; ++i) {
      const double v = x(idx[i], feature);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) continue;  // constant feature in this node
    const double threshold = std::uniform_real_distribution<double>(lo, hi)(rng);
    double left_sum = 0.0, left_sumsq = 0.0;
    int left_n = 0;
    for (int i = begin; i < end; ++i) {
      const double v = x(idx[i], feature);
      if (v <= threshold) {
        const double t = y[idx[i]];
        left_sum += t;
        left_sumsq += t * t;
        ++left_n;
      }
    }
    if (left_n == 0 || left_n == n) continue;
    const double right_sum = sum - left_sum;
    const double right_sumsq = sumsq - left_sumsq;
    const int right_n = n - left_n;
    const double gain = parent_sse - (left_sumsq - left_sum * left_sum / left_n) -
                        (right_sumsq - right_sum * right_sum / right_n);
    if (gain > best.gain) {
      best.gain = gain;
      best.feature = feature;
      best.threshold = threshold;
    }
  }
  if (best.feature >= 0 && best.gain <= 1e-12 * std::max(1.0, sumsq / n)) best.feature = -1;
  return best;
}

void collect_rules(const std::vector<TreeNode>& nodes, int node, LeafRule& path,
                   std::vector<LeafRule>& rules) {
  const TreeNode& nd = nodes[node];
  if (nd.is_leaf()) {
    rules.push_back(path);
    return;
  }
  path.push_back({nd.feature, nd.threshold, false});
  collect_rules(nodes, nd.left, path, rules);
  path.back().greater = true;
  collect_rules(nodes, nd.right, path, rules);
  path.pop_back();
}

}  // namespace

TreeModel::TreeModel(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  require(!nodes_.empty(), "tree must have at least one node");
  for (const auto& node : nodes_)
    if (node.is_leaf()) ++leaf_count_;
}

double TreeModel::predict(const Eigen::Ref<const VectorXd>& x) const {
  int node = 0;
  while (!nodes_[node].is_leaf())
    node = x[nodes_[node].feature] <= nodes_[node].threshold ? nodes_[node].left
                                                             : nodes_[node].right;
  return nodes_[node].value;
}

int default_max_leaf_nodes(int n) {
  if (n < 2) return 2;
  return std::max(2, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)) *
                                                std::log(static_cast<double>(n)))));
}

TreeModel fit_extra_tree(const Eigen::Ref<const MatrixXd>& x,
                         const Eigen::Ref<const VectorXd>& y, const TreeConfig& config,
                         std::mt19937_64& rng) {
  const int n = static_cast<int>(x.rows());
  if (n < 2) throw DataError("need at least two samples to fit a tree");
  require(x.rows() == y.size(), "feature and target row counts must match");
  const int max_leaves =
      config.max_leaf_nodes > 0 ? config.max_leaf_nodes : default_max_leaf_nodes(n);
  require(max_leaves >= 2, "max_leaf_nodes must be at least 2");

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);

  std::vector<TreeNode> nodes;
  nodes.push_back({-1, 0.0, -1, -1, y.mean()});

  std::priority_queue<FrontierLeaf, std::vector<FrontierLeaf>, GainOrder> frontier;
  int order = 0;
  FrontierLeaf root{0, 0, n, {}, order++};
  if (n >= config.min_samples_split)
    root.split = draw_split(x, y, idx, 0, n, config.candidates_per_split, rng);
  frontier.push(root);

  int leaves = 1;
  while (leaves < max_leaves && !frontier.empty()) {
    FrontierLeaf leaf = frontier.top();
    frontier.pop();
    if (leaf.split.feature < 0) continue;  // nothing splittable remains at the top

    const int feature = leaf.split.feature;
    const double threshold = leaf.split.threshold;
    auto mid_it = std::stable_partition(
        idx.begin() + leaf.begin, idx.begin() + leaf.end,
        [&](int i) { return x(i, feature) <= threshold; });
    const int mid = static_cast<int>(mid_it - idx.begin());

    const int left_id = static_cast<int>(nodes.size());
    const int right_id = left_id + 1;
    double left_mean = 0.0, right_mean = 0.0;
    for (int i = leaf.begin; i < mid; ++i) left_mean += y[idx[i]];
    for (int i = mid; i < leaf.end; ++i) right_mean += y[idx[i]];
    left_mean /= (mid - leaf.begin);
    right_mean /= (leaf.end - mid);

    nodes[leaf.node].feature = feature;
    nodes[leaf.node].threshold = threshold;
    nodes[leaf.node].left = left_id;
    nodes[leaf.node].right = right_id;
    nodes.push_back({-1, 0.0, -1, -1, left_mean});
    nodes.push_back({-1, 0.0, -1, -1, right_mean});
    ++leaves;

    FrontierLeaf left{left_id, leaf.begin, mid, {}, order++};
    if (mid - leaf.begin >= config.min_samples_split)
      left.split = draw_split(x, y, idx, leaf.begin, mid, config.candidates_per_split, rng);
    FrontierLeaf right{right_id, mid, leaf.end, {}, order++};
    if (leaf.end - mid >= config.min_samples_split)
      right.split = draw_split(x, y, idx, mid, leaf.end, config.candidates_per_split, rng);
    frontier.push(left);
    frontier.push(right);
  }
  return TreeModel(std::move(nodes));
}

double ForestModel::predict(const Eigen::Ref<const VectorXd>& x) const {
  double total = 0.0;
  for (const auto& tree : trees) total += tree.predict(x);
  return trees.empty() ? 0.0 : total / static_cast<double>(trees.size());
}

ForestModel fit_forest(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                       int n_trees, const TreeConfig& config, std::uint64_t seed, int threads) {
  require(n_trees >= 1, "forest needs at least one tree");
  ForestModel forest;
  forest.trees.resize(n_trees);
  forest.seeds.resize(n_trees);
  for (int m = 0; m < n_trees; ++m) forest.seeds[m] = splitmix64(seed ^ splitmix64(m + 1));

  auto fit_one = [&](int m) {
    auto rng = std::mt19937_64(forest.seeds[m]);
    forest.trees[m] = fit_extra_tree(x, y, config, rng);
  };

  if (threads <= 1 || n_trees == 1) {
    for (int m = 0; m < n_trees; ++m) fit_one(m);
  } else {
    std::vector<std::future<void>> tasks;
    std::atomic<int> next{0};
    const int workers = std::min(threads, n_trees);
    for (int w = 0; w < workers; ++w)
      tasks.push_back(std::async(std::launch::async, [&]() {
        for (int m = next.fetch_add(1); m < n_trees; m = next.fetch_add(1)) fit_one(m);
      }));
    for (auto& task : tasks) task.get();
  }
  return forest;
}

std::vector<LeafRule> extract_leaf_rules(const TreeModel& tree) {
  std::vector<LeafRule> rules;
  LeafRule path;
  collect_rules(tree.nodes(), 0, path, rules);
  return rules;
}

std::shared_ptr<SoftTreeMap> tree_feature_map(const TreeModel& tree,
                                              std::vector<ColumnSpec> roles, TreeEvalMode mode,
                                              double c_continuous, double c_discrete) {
  return std::make_shared<SoftTreeMap>(extract_leaf_rules(tree), std::move(roles), mode,
                                       c_continuous, c_discrete);
}

}  // namespace psivar
