#pragma once

#include <string>
#include <vector>

#include "tensql/kernels.hpp"
#include "tensql/plan.hpp"

namespace tensql {

// One tensor instruction. Kernel opcodes map 1:1 onto the kernel set; the
// plumbing opcodes materialize constants, index vectors, casts and shape
// adjustments the lowering recipes need between kernel calls. String tensors
// have data-dependent widths, so the three string-aware plumbing ops
// (SortPermRows, StringCompare, PadWidthLike) resolve widths at run time.
enum class InstrOp : uint8_t {
  // kernels
  Compare,
  Arith,
  Logical,
  Not,
  SelectWhere,
  PrefixSum,
  Compact,
  ArgsortStable,
  Gather,
  SearchSorted,
  ExpandSegments,
  SegmentStarts,
  SegmentedReduce,
  MatMul,
  SubstringMatch,
  // plumbing
  LoadColumn,       // bind an input table column to a slot
  ConstTensor,      // embed a literal tensor
  IotaRows,         // [0..rows(input)) as Int64; param >= 0 caps the length
  IotaLen,          // [0..n) where n is the scalar Int64 in the input slot
  Cast,             // elementwise dtype conversion to cast_to
  ExpF64,           // elementwise exp (logistic models)
  LastOrZero,       // (1,1) Int64: last element of an Int64 vector, 0 if empty
  PackCols,         // k (n,1) Float64 slots into one (n,k) matrix
  BroadcastScalar,  // single row repeated rows(like-input) times
  PadWidthLike,     // zero-extend an (n,m) Int32 tensor to the like-input's width
  SortPermRows,     // refine a sort permutation by one key: inputs [key, perm],
                    // param 1 = ascending; multi-byte keys run one stable
                    // argsort pass per byte column, last byte first
  StringCompare,    // rowwise byte comparison of padded strings (cmp param);
                    // the narrower operand is zero-extended
};

const char* instr_op_name(InstrOp op);

struct Instr {
  InstrOp op;
  std::vector<int> inputs;
  int output = -1;

  CompareOp cmp{};
  ArithOp arith{};
  LogicalOp logic{};
  SearchSide side{};
  ReduceOp reduce{};
  MatchAnchor anchor{};
  DType cast_to{};
  std::string pattern;        // SubstringMatch
  std::string table, column;  // LoadColumn
  Tensor constant;            // ConstTensor
  int64_t param = -1;         // IotaRows cap / SortPermRows direction /
                              // SegmentedReduce static segment count
};

// One relational operator lowered to its kernel subprogram.
struct OperatorStep {
  std::string id;    // "filter#1"
  std::string kind;  // plan_tag of the source node
  std::vector<Instr> instrs;
  std::vector<int> output_slots;  // the operator's column slots
};

struct OperatorPlan {
  struct OutputCol {
    std::string name;
    LogicalType type;
    int slot;
  };

  std::vector<OperatorStep> steps;
  int num_slots = 0;
  std::vector<OutputCol> outputs;
  // tables the program loads, with their catalog schemas
  std::vector<std::pair<std::string, TableSchema>> input_tables;
};

// Lowers a validated plan onto the kernel set. Every slot is written exactly
// once, in topological order.
OperatorPlan plan_operators(const PlanPtr& plan, const Catalog& catalog);

// Graphviz rendering with one cluster per relational operator.
std::string operator_plan_to_dot(const OperatorPlan& plan);

}  // namespace tensql
