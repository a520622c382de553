#pragma once

#include <map>
#include <string>
#include <vector>

#include "tensql/plan.hpp"

namespace tensql {

class ExecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TableSet = std::map<std::string, EncodedTable>;

struct InterpreterStats {
  // rows produced per plan node, in plan_nodes_postorder order
  std::vector<int64_t> rows_out;
};

// Row-at-a-time oracle: nested-loop join, hash-map group-by, scalar
// expression evaluation. Shares no code with the tensor lowering or the
// kernel set. Expressions are evaluated eagerly (no short-circuiting), so
// data errors surface exactly as they do in the tensor path.
EncodedTable reference_interpreter(const PlanPtr& plan, const Catalog& catalog,
                                   const TableSet& tables, InterpreterStats* stats = nullptr);

}  // namespace tensql
