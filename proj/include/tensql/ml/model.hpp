#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tensql/tensor.hpp"

namespace tensql {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind : uint8_t { Linear, Logistic, DecisionTree };

const char* model_kind_name(ModelKind k);

struct TreeNode {
  bool is_leaf = false;
  double leaf_value = 0.0;
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
};

// User model as loaded from JSON. Trees route LEFT when feature < threshold
// (strict); node 0 is the root and every internal node has two children.
struct ModelSpec {
  ModelKind kind = ModelKind::Linear;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<TreeNode> nodes;

  int feature_count() const;
};

// Structural validation with field paths in error messages.
void validate_model(const ModelSpec& spec);

ModelSpec load_model_json_text(const std::string& text);
ModelSpec load_model_file(const std::string& path);

// Matrix form for GEMM execution. For a tree with I internal nodes and L
// leaves: feature_selector A is (F,I) with a single 1 per column; thresholds
// B is a (1,I) row; path_matrix C is (I,L) with +1 when the leaf sits in the
// internal node's left subtree, -1 for the right subtree, 0 otherwise;
// left_counts D is a (1,L) row with the number of +1 entries per leaf column;
// leaf_values E is the (L) vector of outputs.
struct TensorizedModel {
  ModelKind kind = ModelKind::Linear;
  int feature_count = 0;

  Tensor weights;  // (F,1)
  double bias = 0.0;

  bool constant_tree = false;
  double constant_value = 0.0;
  Tensor feature_selector;
  Tensor thresholds;
  Tensor path_matrix;
  Tensor left_counts;
  Tensor leaf_values;
};

TensorizedModel tensorize(const ModelSpec& spec);

// Row-at-a-time prediction by direct evaluation (recursive traversal for
// trees); shares nothing with the GEMM lowering.
double predict_scalar(const ModelSpec& spec, std::span<const double> features);

}  // namespace tensql
