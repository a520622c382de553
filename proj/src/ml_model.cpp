#include "tensql/ml/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tensql {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ModelError(msg); }

}  // namespace

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Linear: return "linear";
    case ModelKind::Logistic: return "logistic";
    case ModelKind::DecisionTree: return "tree";
  }
  return "?";
}

int ModelSpec::feature_count() const {
  if (kind != ModelKind::DecisionTree) return static_cast<int>(weights.size());
  int f = 0;
  for (const auto& n : nodes) {
    if (!n.is_leaf) f = std::max(f, n.feature + 1);
  }
  return f;
}

void validate_model(const ModelSpec& spec) {
  if (spec.kind != ModelKind::DecisionTree) {
    if (spec.weights.empty()) fail("model: \"weights\" must be non-empty");
    for (size_t i = 0; i < spec.weights.size(); ++i) {
      if (!std::isfinite(spec.weights[i])) {
        fail("model: weights[" + std::to_string(i) + "] is not finite");
      }
    }
    if (!std::isfinite(spec.bias)) fail("model: \"bias\" is not finite");
    return;
  }

  const auto& nodes = spec.nodes;
  if (nodes.empty()) fail("model: \"nodes\" must be non-empty");
  int n = static_cast<int>(nodes.size());
  for (int i = 0; i < n; ++i) {
    const auto& nd = nodes[static_cast<size_t>(i)];
    if (nd.is_leaf) continue;
    std::string at = "nodes[" + std::to_string(i) + "]";
    if (nd.feature < 0) fail("model: " + at + ".feature must be >= 0");
    if (!std::isfinite(nd.threshold)) fail("model: " + at + ".threshold is not finite");
    if (nd.left < 0 || nd.left >= n) fail("model: " + at + ".left child index out of range");
    if (nd.right < 0 || nd.right >= n) fail("model: " + at + ".right child index out of range");
  }
  // Reachability from the root must visit every node exactly once (proper
  // binary tree, acyclic, single root at index 0).
  std::vector<int> seen(static_cast<size_t>(n), 0);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    if (seen[static_cast<size_t>(i)]++) {
      fail("model: nodes[" + std::to_string(i) + "] reached twice (not a tree)");
    }
    const auto& nd = nodes[static_cast<size_t>(i)];
    if (!nd.is_leaf) {
      stack.push_back(nd.left);
      stack.push_back(nd.right);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!seen[static_cast<size_t>(i)]) {
      fail("model: nodes[" + std::to_string(i) + "] unreachable from the root");
    }
  }
}

namespace {

ModelSpec model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    fail("model: expected an object with a \"kind\" field");
  }
  std::string kind = j["kind"].get<std::string>();
  ModelSpec spec;
  if (kind == "linear" || kind == "logistic") {
    spec.kind = kind == "linear" ? ModelKind::Linear : ModelKind::Logistic;
    if (!j.contains("weights") || !j["weights"].is_array()) {
      fail("model: \"weights\" must be an array");
    }
    for (const auto& w : j["weights"]) {
      if (!w.is_number()) fail("model: \"weights\" entries must be numbers");
      spec.weights.push_back(w.get<double>());
    }
    if (!j.contains("bias") || !j["bias"].is_number()) fail("model: \"bias\" must be a number");
    spec.bias = j["bias"].get<double>();
  } else if (kind == "tree") {
    spec.kind = ModelKind::DecisionTree;
    if (!j.contains("nodes") || !j["nodes"].is_array()) fail("model: \"nodes\" must be an array");
    size_t i = 0;
    for (const auto& nj : j["nodes"]) {
      std::string at = "nodes[" + std::to_string(i++) + "]";
      if (!nj.is_object()) fail("model: " + at + " must be an object");
      TreeNode node;
      if (nj.contains("leaf")) {
        if (!nj["leaf"].is_number()) fail("model: " + at + ".leaf must be a number");
        node.is_leaf = true;
        node.leaf_value = nj["leaf"].get<double>();
      } else {
        for (const char* field : {"feature", "threshold", "left", "right"}) {
          if (!nj.contains(field) || !nj[field].is_number()) {
            fail("model: " + at + "." + field + " must be a number");
          }
        }
        node.feature = nj["feature"].get<int>();
        node.threshold = nj["threshold"].get<double>();
        node.left = nj["left"].get<int>();
        node.right = nj["right"].get<int>();
      }
      spec.nodes.push_back(node);
    }
  } else {
    fail("model: unknown kind '" + kind + "' (expected linear|logistic|tree)");
  }
  validate_model(spec);
  return spec;
}

}  // namespace

ModelSpec load_model_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("model: invalid JSON: ") + e.what());
  }
  return model_from_json(j);
}

ModelSpec load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("model: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_model_json_text(ss.str());
}

TensorizedModel tensorize(const ModelSpec& spec) {
  validate_model(spec);
  TensorizedModel out;
  out.kind = spec.kind;
  out.feature_count = spec.feature_count();

  if (spec.kind != ModelKind::DecisionTree) {
    std::vector<double> w = spec.weights;
    int64_t rows = static_cast<int64_t>(w.size());
    out.weights = Tensor::from_matrix(rows, 1, std::move(w));
    out.bias = spec.bias;
    return out;
  }

  // Column order: internal nodes and leaves each in node-array order.
  std::vector<int> internal_col(spec.nodes.size(), -1);
  std::vector<int> leaf_col(spec.nodes.size(), -1);
  int num_internal = 0, num_leaves = 0;
  for (size_t i = 0; i < spec.nodes.size(); ++i) {
    if (spec.nodes[i].is_leaf) {
      leaf_col[i] = num_leaves++;
    } else {
      internal_col[i] = num_internal++;
    }
  }

  if (num_internal == 0) {
    out.constant_tree = true;
    out.constant_value = spec.nodes[0].leaf_value;
    return out;
  }

  int f = out.feature_count;
  std::vector<double> a(static_cast<size_t>(f) * static_cast<size_t>(num_internal), 0.0);
  std::vector<double> b(static_cast<size_t>(num_internal), 0.0);
  std::vector<double> c(static_cast<size_t>(num_internal) * static_cast<size_t>(num_leaves), 0.0);
  std::vector<double> d(static_cast<size_t>(num_leaves), 0.0);
  std::vector<double> e(static_cast<size_t>(num_leaves), 0.0);

  for (size_t i = 0; i < spec.nodes.size(); ++i) {
    const auto& nd = spec.nodes[i];
    if (nd.is_leaf) {
      e[static_cast<size_t>(leaf_col[i])] = nd.leaf_value;
      continue;
    }
    int col = internal_col[i];
    a[static_cast<size_t>(nd.feature) * static_cast<size_t>(num_internal) +
      static_cast<size_t>(col)] = 1.0;
    b[static_cast<size_t>(col)] = nd.threshold;
    // Mark every leaf under this node's left subtree +1 and right subtree -1.
    auto mark = [&](int subtree, double sign) {
      std::vector<int> stack{subtree};
      while (!stack.empty()) {
        int t = stack.back();
        stack.pop_back();
        const auto& tn = spec.nodes[static_cast<size_t>(t)];
        if (tn.is_leaf) {
          size_t idx = static_cast<size_t>(col) * static_cast<size_t>(num_leaves) +
                       static_cast<size_t>(leaf_col[static_cast<size_t>(t)]);
          c[idx] = sign;
          if (sign > 0) d[static_cast<size_t>(leaf_col[static_cast<size_t>(t)])] += 1.0;
        } else {
          stack.push_back(tn.left);
          stack.push_back(tn.right);
        }
      }
    };
    mark(nd.left, 1.0);
    mark(nd.right, -1.0);
  }

  out.feature_selector = Tensor::from_matrix(f, num_internal, std::move(a));
  out.thresholds = Tensor::from_matrix(1, num_internal, std::move(b));
  out.path_matrix = Tensor::from_matrix(num_internal, num_leaves, std::move(c));
  out.left_counts = Tensor::from_matrix(1, num_leaves, std::move(d));
  out.leaf_values = Tensor::from_vector(std::move(e));
  return out;
}

double predict_scalar(const ModelSpec& spec, std::span<const double> features) {
  if (static_cast<int>(features.size()) < spec.feature_count()) {
    fail("model: expected " + std::to_string(spec.feature_count()) + " features, got " +
         std::to_string(features.size()));
  }
  if (spec.kind != ModelKind::DecisionTree) {
    double acc = spec.bias;
    for (size_t i = 0; i < spec.weights.size(); ++i) acc += spec.weights[i] * features[i];
    if (spec.kind == ModelKind::Logistic) acc = 1.0 / (1.0 + std::exp(-acc));
    return acc;
  }
  const TreeNode* node = &spec.nodes[0];
  while (!node->is_leaf) {
    int next = features[static_cast<size_t>(node->feature)] < node->threshold ? node->left
                                                                              : node->right;
    node = &spec.nodes[static_cast<size_t>(next)];
  }
  return node->leaf_value;
}

}  // namespace tensql
