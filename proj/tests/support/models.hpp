#pragma once

#include "tensql/ml/model.hpp"
#include "test_util.hpp"

namespace tensql::testing {

// Proper random binary tree over `features` features, depth <= max_depth.
inline ModelSpec random_tree(Rng& rng, int features, int max_depth) {
  ModelSpec spec;
  spec.kind = ModelKind::DecisionTree;
  // build recursively; children are appended after their parent
  std::function<int(int)> build = [&](int depth) -> int {
    int idx = static_cast<int>(spec.nodes.size());
    spec.nodes.emplace_back();
    bool leaf = depth >= max_depth || (depth > 0 && rng() % 3 == 0);
    if (leaf) {
      spec.nodes[static_cast<size_t>(idx)].is_leaf = true;
      spec.nodes[static_cast<size_t>(idx)].leaf_value =
          static_cast<double>(static_cast<int64_t>(rng() % 2000)) / 10.0 - 100.0;
    } else {
      int feature = static_cast<int>(rng() % static_cast<uint64_t>(features));
      double threshold = static_cast<double>(static_cast<int64_t>(rng() % 200)) / 10.0 - 10.0;
      int left = build(depth + 1);
      int right = build(depth + 1);
      auto& node = spec.nodes[static_cast<size_t>(idx)];
      node.feature = feature;
      node.threshold = threshold;
      node.left = left;
      node.right = right;
    }
    return idx;
  };
  build(0);
  return spec;
}

// Random feature rows; occasionally pins a value to one of the tree's
// thresholds so the strict `<` rule gets exercised on exact hits.
inline std::vector<std::vector<double>> random_feature_rows(Rng& rng, const ModelSpec& tree,
                                                            int features, size_t n) {
  std::vector<double> thresholds;
  for (const auto& node : tree.nodes) {
    if (!node.is_leaf) thresholds.push_back(node.threshold);
  }
  std::vector<std::vector<double>> rows(n, std::vector<double>(static_cast<size_t>(features)));
  for (auto& row : rows) {
    for (auto& v : row) {
      if (!thresholds.empty() && rng() % 4 == 0) {
        v = thresholds[rng() % thresholds.size()];
      } else {
        v = static_cast<double>(static_cast<int64_t>(rng() % 4000)) / 100.0 - 20.0;
      }
    }
  }
  return rows;
}

}  // namespace tensql::testing
