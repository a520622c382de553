#pragma once

#include <string>
#include <vector>

#include "tensql/backend.hpp"
#include "tensql/exec/interpreter.hpp"
#include "tensql/exec/operator_plan.hpp"

namespace tensql {

struct KernelTrace {
  std::string op_id;   // owning relational operator
  std::string kernel;  // instruction name
  int64_t start_ns;
  int64_t wall_ns;
  int64_t rows;
  int64_t bytes;
};

struct OperatorTrace {
  std::string id;
  std::string kind;
  int64_t start_ns;
  int64_t wall_ns;
  int64_t rows_out;
  int64_t bytes;
};

struct ProfileTrace {
  std::string backend;
  std::vector<OperatorTrace> operators;
  std::vector<KernelTrace> kernels;

  int64_t total_kernel_ns() const;
  // Chrome trace-event JSON ("X" complete events, microsecond timestamps).
  std::string to_chrome_json() const;
};

// Runnable form of an operator plan bound to one backend. Executions are
// deterministic: running the same executor twice over the same tables yields
// bit-identical results on either backend.
class Executor {
 public:
  Executor(OperatorPlan plan, const KernelBackend& backend);

  const OperatorPlan& plan() const { return plan_; }
  std::string_view backend_name() const { return backend_.name(); }

  EncodedTable execute(const TableSet& tables) const;
  EncodedTable profile_execute(const TableSet& tables, ProfileTrace& trace) const;

 private:
  EncodedTable run(const TableSet& tables, ProfileTrace* trace) const;

  OperatorPlan plan_;
  const KernelBackend& backend_;
  std::vector<int64_t> last_use_;  // global instruction ordinal per slot
};

inline Executor build_executor(OperatorPlan plan, const KernelBackend& backend) {
  return Executor(std::move(plan), backend);
}

}  // namespace tensql
