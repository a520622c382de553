#include "tensql/exec/executor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include <nlohmann/json.hpp>

#include "tensql/strings.hpp"

namespace tensql {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ExecError(msg); }

int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Tensor slice_col_copy(const KernelBackend& b, const Tensor& t, int64_t j) {
  if (j < 0 || j >= t.cols()) fail("slice: column out of range");
  if (t.dtype() != DType::Int32) fail("slice: expected an int32 string tensor");
  auto v = t.data<int32_t>();
  int64_t n = t.rows(), m = t.cols();
  std::vector<int32_t> out(static_cast<size_t>(n));
  b.parallel_for(n, 16384, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      out[static_cast<size_t>(i)] = v[static_cast<size_t>(i * m + j)];
    }
  });
  return Tensor::from_vector(std::move(out));
}

// One stable refinement pass of a sort permutation by `key` (any width).
// Multi-byte keys run one argsort pass per byte column, last byte first, so
// the composition yields the stable lexicographic byte order. A descending
// pass reverses the input, argsorts, and flips the permutation, which keeps
// equal keys in source order.
Tensor sort_perm_rows(const KernelBackend& b, const Tensor& key, const Tensor& perm, bool asc) {
  Tensor p = perm;
  for (int64_t j = key.cols() - 1; j >= 0; --j) {
    Tensor col = key.cols() == 1 ? key : slice_col_copy(b, key, j);
    Tensor k = gather(b, col, p);
    Tensor p2;
    if (asc) {
      p2 = argsort_stable(b, k);
    } else {
      int64_t n = k.rows();
      std::vector<int64_t> rev(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) rev[static_cast<size_t>(i)] = n - 1 - i;
      Tensor rev_t = Tensor::from_vector(std::move(rev));
      Tensor ps = argsort_stable(b, gather(b, k, rev_t));
      auto psv = ps.data<int64_t>();
      std::vector<int64_t> flipped(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) {
        flipped[static_cast<size_t>(i)] = n - 1 - psv[static_cast<size_t>(n - 1 - i)];
      }
      p2 = Tensor::from_vector(std::move(flipped));
    }
    p = gather(b, p, p2);
  }
  return p;
}

// Rowwise byte-order comparison of padded strings; the narrower side reads as
// zero-extended. Either side may be a single row broadcast over the other.
Tensor string_compare_rows(const KernelBackend& b, const Tensor& a, const Tensor& t,
                           CompareOp op) {
  if (a.dtype() != DType::Int32 || t.dtype() != DType::Int32) {
    fail("string_compare: expected int32 string tensors");
  }
  int64_t rows = std::max(a.rows(), t.rows());
  if ((a.rows() != rows && a.rows() != 1) || (t.rows() != rows && t.rows() != 1)) {
    fail("string_compare: row mismatch");
  }
  auto av = a.data<int32_t>();
  auto tv = t.data<int32_t>();
  int64_t m = std::max(a.cols(), t.cols());
  std::vector<uint8_t> out(static_cast<size_t>(rows));
  b.parallel_for(rows, 8192, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      int64_t ra = a.rows() == 1 ? 0 : i;
      int64_t rt = t.rows() == 1 ? 0 : i;
      int cmp = 0;
      for (int64_t j = 0; j < m && cmp == 0; ++j) {
        int32_t x = j < a.cols() ? av[static_cast<size_t>(ra * a.cols() + j)] : 0;
        int32_t y = j < t.cols() ? tv[static_cast<size_t>(rt * t.cols() + j)] : 0;
        if (x != y) cmp = x < y ? -1 : 1;
      }
      bool r = false;
      switch (op) {
        case CompareOp::EQ: r = cmp == 0; break;
        case CompareOp::NE: r = cmp != 0; break;
        case CompareOp::LT: r = cmp < 0; break;
        case CompareOp::LE: r = cmp <= 0; break;
        case CompareOp::GT: r = cmp > 0; break;
        case CompareOp::GE: r = cmp >= 0; break;
      }
      out[static_cast<size_t>(i)] = r ? 1 : 0;
    }
  });
  return Tensor::from_vector(std::move(out));
}

template <typename From, typename To>
Tensor cast_run(const KernelBackend& b, const Tensor& t) {
  auto v = t.data<From>();
  std::vector<To> out(v.size());
  b.parallel_for(static_cast<int64_t>(v.size()), 16384, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      if constexpr (std::is_same_v<To, uint8_t>) {
        out[static_cast<size_t>(i)] = v[static_cast<size_t>(i)] != From{} ? 1 : 0;
      } else {
        out[static_cast<size_t>(i)] = static_cast<To>(v[static_cast<size_t>(i)]);
      }
    }
  });
  return Tensor::from_matrix(t.rows(), t.cols(), std::move(out));
}

template <typename From>
Tensor cast_from(const KernelBackend& b, const Tensor& t, DType to) {
  switch (to) {
    case DType::Bool: return cast_run<From, uint8_t>(b, t);
    case DType::Int32: return cast_run<From, int32_t>(b, t);
    case DType::Int64: return cast_run<From, int64_t>(b, t);
    case DType::Float64: return cast_run<From, double>(b, t);
  }
  fail("cast: bad target");
}

Tensor cast_tensor(const KernelBackend& b, const Tensor& t, DType to) {
  if (t.dtype() == to) return t;
  switch (t.dtype()) {
    case DType::Bool: return cast_from<uint8_t>(b, t, to);
    case DType::Int32: return cast_from<int32_t>(b, t, to);
    case DType::Int64: return cast_from<int64_t>(b, t, to);
    case DType::Float64: return cast_from<double>(b, t, to);
  }
  fail("cast: bad source");
}

template <typename T>
Tensor replicate_row_typed(const KernelBackend& b, const Tensor& value, int64_t n) {
  auto v = value.data<T>();
  int64_t m = value.cols();
  std::vector<T> out(static_cast<size_t>(n * m));
  b.parallel_for(n, 16384, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      std::copy_n(v.data(), m, out.data() + i * m);
    }
  });
  return Tensor::from_matrix(n, m, std::move(out));
}

Tensor replicate_row(const KernelBackend& b, const Tensor& value, int64_t n) {
  switch (value.dtype()) {
    case DType::Bool: return replicate_row_typed<uint8_t>(b, value, n);
    case DType::Int32: return replicate_row_typed<int32_t>(b, value, n);
    case DType::Int64: return replicate_row_typed<int64_t>(b, value, n);
    case DType::Float64: return replicate_row_typed<double>(b, value, n);
  }
  fail("broadcast: bad dtype");
}

Tensor exp_f64(const KernelBackend& b, const Tensor& t) {
  auto v = t.data<double>();
  std::vector<double> out(v.size());
  b.parallel_for(static_cast<int64_t>(v.size()), 16384, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) out[static_cast<size_t>(i)] = std::exp(v[static_cast<size_t>(i)]);
  });
  return Tensor::from_matrix(t.rows(), t.cols(), std::move(out));
}

struct SlotView {
  const std::vector<std::optional<Tensor>>& slots;
  const Tensor& operator[](int i) const {
    if (!slots[static_cast<size_t>(i)]) {
      throw ExecError("internal: slot " + std::to_string(i) + " read after release");
    }
    return *slots[static_cast<size_t>(i)];
  }
};

Tensor exec_instr(const Instr& instr, const SlotView& slot, const TableSet& tables,
                  const KernelBackend& b) {
  auto in = [&](size_t i) -> const Tensor& { return slot[instr.inputs.at(i)]; };
  switch (instr.op) {
    case InstrOp::Compare: return compare(b, in(0), in(1), instr.cmp);
    case InstrOp::Arith: return arith(b, in(0), in(1), instr.arith);
    case InstrOp::Logical: return logical(b, in(0), in(1), instr.logic);
    case InstrOp::Not: return logical_not(b, in(0));
    case InstrOp::SelectWhere: return select_where(b, in(0), in(1), in(2));
    case InstrOp::PrefixSum: return prefix_sum_exclusive(b, in(0));
    case InstrOp::Compact: return compact(b, in(0), in(1));
    case InstrOp::ArgsortStable: return argsort_stable(b, in(0));
    case InstrOp::Gather: return gather(b, in(0), in(1));
    case InstrOp::SearchSorted: return searchsorted(b, in(0), in(1), instr.side);
    case InstrOp::ExpandSegments: return expand_segments(b, in(0), in(1));
    case InstrOp::SegmentStarts: return segment_starts(b, in(0));
    case InstrOp::SegmentedReduce: {
      int64_t num = instr.param;
      if (num < 0) num = std::max<int64_t>(0, in(2).item<int64_t>());
      return segmented_reduce(b, in(0), in(1), num, instr.reduce);
    }
    case InstrOp::MatMul: return matmul(b, in(0), in(1));
    case InstrOp::SubstringMatch: return substring_match(b, in(0), instr.pattern, instr.anchor);

    case InstrOp::LoadColumn: {
      const EncodedTable* t = nullptr;
      for (const auto& [name, table] : tables) {
        if (iequals(name, instr.table)) t = &table;
      }
      if (!t) fail("no input table named '" + instr.table + "'");
      return t->column(instr.column).tensor;
    }
    case InstrOp::ConstTensor: return instr.constant;
    case InstrOp::IotaRows: {
      int64_t n = in(0).rows();
      if (instr.param >= 0) n = std::min(n, instr.param);
      std::vector<int64_t> v(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) v[static_cast<size_t>(i)] = i;
      return Tensor::from_vector(std::move(v));
    }
    case InstrOp::IotaLen: {
      int64_t n = in(0).item<int64_t>();
      if (n < 0) fail("iota: negative length");
      std::vector<int64_t> v(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) v[static_cast<size_t>(i)] = i;
      return Tensor::from_vector(std::move(v));
    }
    case InstrOp::Cast: return cast_tensor(b, in(0), instr.cast_to);
    case InstrOp::ExpF64: return exp_f64(b, in(0));
    case InstrOp::LastOrZero: {
      auto v = in(0).data<int64_t>();
      return Tensor::scalar<int64_t>(v.empty() ? 0 : v.back());
    }
    case InstrOp::PackCols: {
      if (instr.inputs.empty()) fail("pack: no columns");
      int64_t n = in(0).rows();
      int64_t k = static_cast<int64_t>(instr.inputs.size());
      std::vector<double> out(static_cast<size_t>(n * k));
      for (int64_t c = 0; c < k; ++c) {
        const Tensor& col = in(static_cast<size_t>(c));
        if (col.rows() != n || !col.is_vector()) fail("pack: column shape mismatch");
        auto v = col.data<double>();
        for (int64_t i = 0; i < n; ++i) out[static_cast<size_t>(i * k + c)] = v[static_cast<size_t>(i)];
      }
      return Tensor::from_matrix(n, k, std::move(out));
    }
    case InstrOp::BroadcastScalar: {
      const Tensor& value = in(0);
      if (value.rows() != 1) fail("broadcast: value must have one row");
      int64_t n = in(1).rows();
      return replicate_row(b, value, n);
    }
    case InstrOp::PadWidthLike: {
      const Tensor& t = in(0);
      int64_t target = std::max(t.cols(), in(1).cols());
      if (t.cols() == target) return t;
      auto v = t.data<int32_t>();
      int64_t n = t.rows(), m = t.cols();
      std::vector<int32_t> out(static_cast<size_t>(n * target), 0);
      for (int64_t i = 0; i < n; ++i) {
        std::copy_n(v.data() + i * m, m, out.data() + i * target);
      }
      return Tensor::from_matrix(n, target, std::move(out));
    }
    case InstrOp::SortPermRows: return sort_perm_rows(b, in(0), in(1), instr.param == 1);
    case InstrOp::StringCompare: return string_compare_rows(b, in(0), in(1), instr.cmp);
  }
  fail("unknown instruction");
}

}  // namespace

int64_t ProfileTrace::total_kernel_ns() const {
  int64_t total = 0;
  for (const auto& k : kernels) total += k.wall_ns;
  return total;
}

std::string ProfileTrace::to_chrome_json() const {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& op : operators) {
    events.push_back(
        {{"name", op.id},
         {"cat", "operator"},
         {"ph", "X"},
         {"ts", static_cast<double>(op.start_ns) / 1000.0},
         {"dur", static_cast<double>(op.wall_ns) / 1000.0},
         {"pid", 0},
         {"tid", 0},
         {"args", {{"rows", op.rows_out}, {"bytes", op.bytes}, {"backend", backend}}}});
  }
  for (const auto& k : kernels) {
    events.push_back({{"name", k.kernel},
                      {"cat", "kernel"},
                      {"ph", "X"},
                      {"ts", static_cast<double>(k.start_ns) / 1000.0},
                      {"dur", static_cast<double>(k.wall_ns) / 1000.0},
                      {"pid", 0},
                      {"tid", 1},
                      {"args", {{"operator", k.op_id}, {"rows", k.rows}, {"bytes", k.bytes}}}});
  }
  return events.dump(2);
}

Executor::Executor(OperatorPlan plan, const KernelBackend& backend)
    : plan_(std::move(plan)), backend_(backend) {
  // SSA validation and last-use analysis
  std::vector<bool> written(static_cast<size_t>(plan_.num_slots), false);
  last_use_.assign(static_cast<size_t>(plan_.num_slots), -1);
  int64_t ordinal = 0;
  for (const auto& step : plan_.steps) {
    for (const auto& instr : step.instrs) {
      for (int in : instr.inputs) {
        if (in < 0 || in >= plan_.num_slots || !written[static_cast<size_t>(in)]) {
          throw PlanError("executor: instruction reads slot " + std::to_string(in) +
                          " before it is written");
        }
        last_use_[static_cast<size_t>(in)] = ordinal;
      }
      if (instr.output < 0 || instr.output >= plan_.num_slots ||
          written[static_cast<size_t>(instr.output)]) {
        throw PlanError("executor: slot " + std::to_string(instr.output) +
                        " written twice or out of range");
      }
      written[static_cast<size_t>(instr.output)] = true;
      ++ordinal;
    }
  }
  for (const auto& out : plan_.outputs) {
    if (out.slot < 0 || out.slot >= plan_.num_slots || !written[static_cast<size_t>(out.slot)]) {
      throw PlanError("executor: output slot never written");
    }
    last_use_[static_cast<size_t>(out.slot)] = std::numeric_limits<int64_t>::max();
  }
}

EncodedTable Executor::execute(const TableSet& tables) const { return run(tables, nullptr); }

EncodedTable Executor::profile_execute(const TableSet& tables, ProfileTrace& trace) const {
  trace = ProfileTrace{};
  trace.backend = std::string(backend_.name());
  return run(tables, &trace);
}

EncodedTable Executor::run(const TableSet& tables, ProfileTrace* trace) const {
  // bind and type-check the input tables against the plan's catalog schemas
  for (const auto& [name, schema] : plan_.input_tables) {
    const EncodedTable* t = nullptr;
    for (const auto& [tname, table] : tables) {
      if (iequals(tname, name)) t = &table;
    }
    if (!t) fail("no input table named '" + name + "'");
    for (const auto& spec : schema) {
      const EncodedColumn* c = t->find_column(spec.name);
      if (!c) fail("input table '" + name + "' is missing column '" + spec.name + "'");
      if (c->logical != spec.type) {
        fail("input table '" + name + "': column '" + spec.name + "' is " +
             logical_type_name(c->logical) + ", the plan expects " +
             logical_type_name(spec.type));
      }
    }
  }

  std::vector<std::optional<Tensor>> slots(static_cast<size_t>(plan_.num_slots));
  SlotView view{slots};

  int64_t run_start = now_ns();
  int64_t ordinal = 0;
  for (const auto& step : plan_.steps) {
    int64_t step_start = now_ns();
    int64_t step_bytes = 0;
    int64_t rows_out = 0;
    for (const auto& instr : step.instrs) {
      int64_t t0 = now_ns();
      Tensor result = [&]() -> Tensor {
        try {
          return exec_instr(instr, view, tables, backend_);
        } catch (const KernelError& e) {
          fail(step.id + ": " + e.what());
        } catch (const EncodingError& e) {
          fail(step.id + ": " + e.what());
        }
      }();
      int64_t t1 = now_ns();
      rows_out = result.rows();
      step_bytes += result.byte_size();
      if (trace) {
        trace->kernels.push_back({step.id, instr_op_name(instr.op), t0 - run_start, t1 - t0,
                                  result.rows(), result.byte_size()});
      }
      slots[static_cast<size_t>(instr.output)] = std::move(result);
      // release inputs that will never be read again
      for (int in : instr.inputs) {
        if (last_use_[static_cast<size_t>(in)] == ordinal) {
          slots[static_cast<size_t>(in)].reset();
        }
      }
      ++ordinal;
    }
    if (trace) {
      int64_t step_end = now_ns();
      // output slots are still live here: later steps (or the plan outputs)
      // read them, so their row counts are authoritative
      if (!step.output_slots.empty()) {
        int first = step.output_slots.front();
        if (slots[static_cast<size_t>(first)]) {
          rows_out = slots[static_cast<size_t>(first)]->rows();
        }
      }
      trace->operators.push_back({step.id, step.kind, step_start - run_start,
                                  step_end - step_start, rows_out, step_bytes});
    }
  }

  std::vector<EncodedColumn> cols;
  for (const auto& out : plan_.outputs) {
    cols.push_back({out.name, out.type, view[out.slot]});
  }
  return EncodedTable(std::move(cols));
}

}  // namespace tensql
