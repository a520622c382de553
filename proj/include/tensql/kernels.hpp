#pragma once

#include <cstdint>
#include <string_view>

#include "tensql/backend.hpp"
#include "tensql/tensor.hpp"

namespace tensql {

enum class CompareOp : uint8_t { EQ, NE, LT, LE, GT, GE };
enum class ArithOp : uint8_t { ADD, SUB, MUL, DIV };
enum class LogicalOp : uint8_t { AND, OR };
enum class SearchSide : uint8_t { LEFT, RIGHT };
enum class ReduceOp : uint8_t { SUM, COUNT, MIN, MAX };
enum class MatchAnchor : uint8_t { START, END, ANY, EXACT };

const char* compare_op_name(CompareOp op);
const char* arith_op_name(ArithOp op);
const char* logical_op_name(LogicalOp op);
const char* reduce_op_name(ReduceOp op);
const char* match_anchor_name(MatchAnchor a);

// Elementwise kernels accept operands of equal shape, or a (1,1) scalar or
// (1,m) row on either side, broadcast over the other operand's rows.

// Elementwise comparison; result Bool with the broadcast shape.
Tensor compare(const KernelBackend& b, const Tensor& lhs, const Tensor& rhs, CompareOp op);

// Elementwise arithmetic on numeric tensors; DIV is Float64-only and reports
// the first offending row on division by zero. Integer overflow is an error.
Tensor arith(const KernelBackend& b, const Tensor& lhs, const Tensor& rhs, ArithOp op);

// Elementwise AND/OR over Bool tensors.
Tensor logical(const KernelBackend& b, const Tensor& lhs, const Tensor& rhs, LogicalOp op);
Tensor logical_not(const KernelBackend& b, const Tensor& v);

// out[i] = cond[i] ? a[i] : b[i]; a and b share a dtype.
Tensor select_where(const KernelBackend& b, const Tensor& cond, const Tensor& a, const Tensor& t);

// out[0] = 0; out[i] = out[i-1] + x[i-1]. Int64 vectors, overflow-checked.
Tensor prefix_sum_exclusive(const KernelBackend& b, const Tensor& x);

// Keeps rows where mask is true, order preserved.
Tensor compact(const KernelBackend& b, const Tensor& values, const Tensor& mask);

// Stable ascending permutation of a vector; Float64 keys must be NaN-free.
Tensor argsort_stable(const KernelBackend& b, const Tensor& keys);

// out row i = values row idx[i]; out-of-bounds indices report their position.
Tensor gather(const KernelBackend& b, const Tensor& values, const Tensor& idx);

// Insertion points of probes into a non-decreasing vector. For a probe p the
// half-open range [LEFT(p), RIGHT(p)) is exactly the run of equal keys.
Tensor searchsorted(const KernelBackend& b, const Tensor& sorted, const Tensor& probes,
                    SearchSide side);

// Concatenated runs starts[i], starts[i]+1, ..., starts[i]+counts[i]-1.
Tensor expand_segments(const KernelBackend& b, const Tensor& starts, const Tensor& counts);

// out[0] = true; out[i] = true iff row i differs from row i-1 (full width).
Tensor segment_starts(const KernelBackend& b, const Tensor& sorted_keys);

// Per-segment reduction over values grouped by non-decreasing segment_ids in
// [0, num_segments). Empty segments yield 0 for SUM/COUNT and error for
// MIN/MAX. COUNT returns Int64; the others keep the value dtype.
Tensor segmented_reduce(const KernelBackend& b, const Tensor& values, const Tensor& segment_ids,
                        int64_t num_segments, ReduceOp op);

// Float64 matrix product (n,k) x (k,p) -> (n,p).
Tensor matmul(const KernelBackend& b, const Tensor& a, const Tensor& rhs);

// Byte-pattern match over zero-padded string rows (Int32 byte values).
// START/END/ANY/EXACT anchor against the logical (padding-stripped) value.
// An empty pattern matches every row except under EXACT, where it matches
// only empty strings.
Tensor substring_match(const KernelBackend& b, const Tensor& chars, std::string_view pattern,
                       MatchAnchor anchor);

}  // namespace tensql
