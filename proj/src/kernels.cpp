#include "tensql/kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

namespace tensql {

namespace {

constexpr int64_t kElemGrain = 16384;

[[noreturn]] void fail(const std::string& msg) { throw KernelError(msg); }

template <typename F>
auto dispatch_dtype(DType t, F&& f) {
  switch (t) {
    case DType::Bool: return f(uint8_t{});
    case DType::Int32: return f(int32_t{});
    case DType::Int64: return f(int64_t{});
    case DType::Float64: return f(double{});
  }
  fail("bad dtype tag");
}

// Tracks the smallest offending element index across parallel ranges so the
// reported row does not depend on thread timing.
class FirstBadIndex {
 public:
  void note(int64_t i) {
    int64_t cur = min_.load(std::memory_order_relaxed);
    while (i < cur && !min_.compare_exchange_weak(cur, i, std::memory_order_relaxed)) {
    }
  }
  bool any() const { return min_.load() != std::numeric_limits<int64_t>::max(); }
  int64_t index() const { return min_.load(); }

 private:
  std::atomic<int64_t> min_{std::numeric_limits<int64_t>::max()};
};

struct BroadcastShape {
  int64_t rows;
  int64_t cols;
  bool lhs_scalar, lhs_row;
  bool rhs_scalar, rhs_row;
};

bool broadcastable_into(const Tensor& src, int64_t rows, int64_t cols) {
  if (src.rows() == rows && src.cols() == cols) return true;
  return src.rows() == 1 && (src.cols() == 1 || src.cols() == cols);
}

BroadcastShape broadcast_shape(const char* kernel, const Tensor& a, const Tensor& b) {
  BroadcastShape s{};
  if (a.same_shape(b) || broadcastable_into(b, a.rows(), a.cols())) {
    s.rows = a.rows();
    s.cols = a.cols();
  } else if (broadcastable_into(a, b.rows(), b.cols())) {
    s.rows = b.rows();
    s.cols = b.cols();
  } else {
    fail(std::string(kernel) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
         std::to_string(b.cols()) + ")");
  }
  auto classify = [&](const Tensor& t, bool& scalar, bool& row) {
    scalar = t.is_scalar() && !(s.rows == 1 && s.cols == 1);
    row = !t.is_scalar() && t.rows() == 1 && s.rows > 1 && t.cols() == s.cols;
    if (!scalar && !row && (t.rows() != s.rows || t.cols() != s.cols)) {
      fail(std::string(kernel) + ": shape mismatch");
    }
  };
  classify(a, s.lhs_scalar, s.lhs_row);
  classify(b, s.rhs_scalar, s.rhs_row);
  return s;
}

inline int64_t bcast_index(int64_t flat, int64_t cols, bool scalar, bool row) {
  if (scalar) return 0;
  if (row) return flat % cols;
  return flat;
}

template <typename T, typename Out, typename F>
Tensor binary_elementwise(const KernelBackend& backend, const char* kernel, const Tensor& a,
                          const Tensor& b, F&& fn) {
  BroadcastShape s = broadcast_shape(kernel, a, b);
  auto av = a.data<T>();
  auto bv = b.data<T>();
  int64_t total = s.rows * s.cols;
  std::vector<Out> out(static_cast<size_t>(total));
  backend.parallel_for(total, kElemGrain, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      out[static_cast<size_t>(i)] =
          fn(av[static_cast<size_t>(bcast_index(i, s.cols, s.lhs_scalar, s.lhs_row))],
             bv[static_cast<size_t>(bcast_index(i, s.cols, s.rhs_scalar, s.rhs_row))], i);
    }
  });
  return Tensor::from_matrix(s.rows, s.cols, std::move(out));
}

void require_same_dtype(const char* kernel, const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype()) {
    fail(std::string(kernel) + ": dtype mismatch (" + dtype_name(a.dtype()) + " vs " +
         dtype_name(b.dtype()) + ")");
  }
}

void require_vector(const char* kernel, const Tensor& t) {
  if (!t.is_vector()) fail(std::string(kernel) + ": expected a vector (m=1)");
}

void require_dtype(const char* kernel, const Tensor& t, DType want) {
  if (t.dtype() != want) {
    fail(std::string(kernel) + ": expected " + dtype_name(want) + ", got " +
         dtype_name(t.dtype()));
  }
}

template <typename T>
void require_nan_free(const KernelBackend& backend, const char* kernel,
                      std::span<const T> values) {
  if constexpr (std::is_same_v<T, double>) {
    std::atomic<bool> has_nan{false};
    backend.parallel_for(static_cast<int64_t>(values.size()), kElemGrain,
                         [&](int64_t lo, int64_t hi) {
                           for (int64_t i = lo; i < hi; ++i) {
                             if (std::isnan(values[static_cast<size_t>(i)])) {
                               has_nan.store(true, std::memory_order_relaxed);
                               break;
                             }
                           }
                         });
    if (has_nan.load()) fail(std::string(kernel) + ": NaN in keys");
  }
}

}  // namespace

const char* compare_op_name(CompareOp op) {
  switch (op) {
    case CompareOp::EQ: return "eq";
    case CompareOp::NE: return "ne";
    case CompareOp::LT: return "lt";
    case CompareOp::LE: return "le";
    case CompareOp::GT: return "gt";
    case CompareOp::GE: return "ge";
  }
  return "?";
}

const char* arith_op_name(ArithOp op) {
  switch (op) {
    case ArithOp::ADD: return "add";
    case ArithOp::SUB: return "sub";
    case ArithOp::MUL: return "mul";
    case ArithOp::DIV: return "div";
  }
  return "?";
}

const char* logical_op_name(LogicalOp op) { return op == LogicalOp::AND ? "and" : "or"; }

const char* reduce_op_name(ReduceOp op) {
  switch (op) {
    case ReduceOp::SUM: return "sum";
    case ReduceOp::COUNT: return "count";
    case ReduceOp::MIN: return "min";
    case ReduceOp::MAX: return "max";
  }
  return "?";
}

const char* match_anchor_name(MatchAnchor a) {
  switch (a) {
    case MatchAnchor::START: return "start";
    case MatchAnchor::END: return "end";
    case MatchAnchor::ANY: return "any";
    case MatchAnchor::EXACT: return "exact";
  }
  return "?";
}

Tensor compare(const KernelBackend& b, const Tensor& lhs, const Tensor& rhs, CompareOp op) {
  require_same_dtype("compare", lhs, rhs);
  return dispatch_dtype(lhs.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto run = [&](auto cmp) {
      return binary_elementwise<T, uint8_t>(
          b, "compare", lhs, rhs,
          [cmp](T x, T y, int64_t) { return static_cast<uint8_t>(cmp(x, y)); });
    };
    switch (op) {
      case CompareOp::EQ: return run([](T x, T y) { return x == y; });
      case CompareOp::NE: return run([](T x, T y) { return x != y; });
      case CompareOp::LT: return run([](T x, T y) { return x < y; });
      case CompareOp::LE: return run([](T x, T y) { return x <= y; });
      case CompareOp::GT: return run([](T x, T y) { return x > y; });
      case CompareOp::GE: return run([](T x, T y) { return x >= y; });
    }
    fail("compare: bad op");
  });
}

Tensor arith(const KernelBackend& b, const Tensor& lhs, const Tensor& rhs, ArithOp op) {
  require_same_dtype("arith", lhs, rhs);
  if (lhs.dtype() == DType::Bool) fail("arith: bool operands not supported");
  if (op == ArithOp::DIV && lhs.dtype() != DType::Float64) {
    fail("arith: div requires float64 operands");
  }

  if (lhs.dtype() == DType::Float64) {
    auto run = [&](auto fn) {
      return binary_elementwise<double, double>(b, "arith", lhs, rhs, fn);
    };
    switch (op) {
      case ArithOp::ADD: return run([](double x, double y, int64_t) { return x + y; });
      case ArithOp::SUB: return run([](double x, double y, int64_t) { return x - y; });
      case ArithOp::MUL: return run([](double x, double y, int64_t) { return x * y; });
      case ArithOp::DIV: {
        BroadcastShape s = broadcast_shape("arith", lhs, rhs);
        FirstBadIndex bad;
        auto out = binary_elementwise<double, double>(
            b, "arith", lhs, rhs, [&bad](double x, double y, int64_t i) {
              if (y == 0.0) {
                bad.note(i);
                return 0.0;
              }
              return x / y;
            });
        if (bad.any()) {
          fail("arith: division by zero at row " + std::to_string(bad.index() / s.cols));
        }
        return out;
      }
    }
    fail("arith: bad op");
  }

  return dispatch_dtype(lhs.dtype(), [&](auto tag) -> Tensor {
    using T = decltype(tag);
    if constexpr (std::is_same_v<T, int32_t> || std::is_same_v<T, int64_t>) {
      BroadcastShape s = broadcast_shape("arith", lhs, rhs);
      FirstBadIndex bad;
      auto checked = [&](auto builtin) {
        return [&bad, builtin](T x, T y, int64_t i) {
          T r;
          if (builtin(x, y, &r)) bad.note(i);
          return r;
        };
      };
      Tensor out = [&] {
        switch (op) {
          case ArithOp::ADD:
            return binary_elementwise<T, T>(
                b, "arith", lhs, rhs,
                checked([](T x, T y, T* r) { return __builtin_add_overflow(x, y, r); }));
          case ArithOp::SUB:
            return binary_elementwise<T, T>(
                b, "arith", lhs, rhs,
                checked([](T x, T y, T* r) { return __builtin_sub_overflow(x, y, r); }));
          case ArithOp::MUL:
            return binary_elementwise<T, T>(
                b, "arith", lhs, rhs,
                checked([](T x, T y, T* r) { return __builtin_mul_overflow(x, y, r); }));
          default: fail("arith: bad op");
        }
      }();
      if (bad.any()) {
        fail("arith: integer overflow at row " + std::to_string(bad.index() / s.cols));
      }
      return out;
    } else {
      fail("arith: unsupported dtype");
    }
  });
}

Tensor logical(const KernelBackend& b, const Tensor& lhs, const Tensor& rhs, LogicalOp op) {
  require_dtype("logical", lhs, DType::Bool);
  require_dtype("logical", rhs, DType::Bool);
  if (op == LogicalOp::AND) {
    return binary_elementwise<uint8_t, uint8_t>(
        b, "logical", lhs, rhs,
        [](uint8_t x, uint8_t y, int64_t) { return static_cast<uint8_t>(x && y); });
  }
  return binary_elementwise<uint8_t, uint8_t>(
      b, "logical", lhs, rhs,
      [](uint8_t x, uint8_t y, int64_t) { return static_cast<uint8_t>(x || y); });
}

Tensor logical_not(const KernelBackend& b, const Tensor& v) {
  require_dtype("not", v, DType::Bool);
  auto in = v.data<uint8_t>();
  std::vector<uint8_t> out(static_cast<size_t>(v.size()));
  b.parallel_for(v.size(), kElemGrain, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      out[static_cast<size_t>(i)] = in[static_cast<size_t>(i)] ? 0 : 1;
    }
  });
  return Tensor::from_matrix(v.rows(), v.cols(), std::move(out));
}

Tensor select_where(const KernelBackend& b, const Tensor& cond, const Tensor& a,
                    const Tensor& t) {
  require_dtype("select_where", cond, DType::Bool);
  require_same_dtype("select_where", a, t);
  // Full 2-D broadcasting over the three operands: each dimension is either 1
  // or the output extent. In particular an (n,1) condition selects whole rows
  // of (n,m) values.
  int64_t rows = std::max({cond.rows(), a.rows(), t.rows()});
  int64_t cols = std::max({cond.cols(), a.cols(), t.cols()});
  auto check = [&](const Tensor& x) {
    if ((x.rows() != 1 && x.rows() != rows) || (x.cols() != 1 && x.cols() != cols)) {
      fail("select_where: shape " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
           " does not broadcast to " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  };
  check(cond);
  check(a);
  check(t);
  auto pick = [](const Tensor& x, int64_t r, int64_t c) {
    return (x.rows() == 1 ? 0 : r) * x.cols() + (x.cols() == 1 ? 0 : c);
  };
  auto cv = cond.data<uint8_t>();
  return dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto av = a.data<T>();
    auto tv = t.data<T>();
    std::vector<T> out(static_cast<size_t>(rows * cols));
    b.parallel_for(rows * cols, kElemGrain, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        int64_t r = i / cols, c = i % cols;
        bool sel = cv[static_cast<size_t>(pick(cond, r, c))] != 0;
        out[static_cast<size_t>(i)] = sel ? av[static_cast<size_t>(pick(a, r, c))]
                                          : tv[static_cast<size_t>(pick(t, r, c))];
      }
    });
    return Tensor::from_matrix(rows, cols, std::move(out));
  });
}

Tensor prefix_sum_exclusive(const KernelBackend&, const Tensor& x) {
  require_vector("prefix_sum_exclusive", x);
  require_dtype("prefix_sum_exclusive", x, DType::Int64);
  auto in = x.data<int64_t>();
  std::vector<int64_t> out(in.size());
  int64_t acc = 0;
  for (size_t i = 0; i < in.size(); ++i) {
    out[i] = acc;
    if (__builtin_add_overflow(acc, in[i], &acc)) {
      fail("prefix_sum_exclusive: overflow at row " + std::to_string(i));
    }
  }
  return Tensor::from_vector(std::move(out));
}

Tensor compact(const KernelBackend& b, const Tensor& values, const Tensor& mask) {
  require_dtype("compact", mask, DType::Bool);
  require_vector("compact", mask);
  if (mask.rows() != values.rows()) {
    fail("compact: mask length " + std::to_string(mask.rows()) + " does not match rows " +
         std::to_string(values.rows()));
  }
  auto mv = mask.data<uint8_t>();
  int64_t n = values.rows();
  int64_t m = values.cols();
  constexpr int64_t kBlock = 65536;
  int64_t blocks = std::max<int64_t>(1, (n + kBlock - 1) / kBlock);
  std::vector<int64_t> block_count(static_cast<size_t>(blocks), 0);
  b.parallel_for(blocks, 1, [&](int64_t lo, int64_t hi) {
    for (int64_t blk = lo; blk < hi; ++blk) {
      int64_t begin = blk * kBlock, end = std::min(begin + kBlock, n);
      int64_t c = 0;
      for (int64_t i = begin; i < end; ++i) c += mv[static_cast<size_t>(i)] != 0;
      block_count[static_cast<size_t>(blk)] = c;
    }
  });
  std::vector<int64_t> block_offset(static_cast<size_t>(blocks), 0);
  int64_t total = 0;
  for (int64_t blk = 0; blk < blocks; ++blk) {
    block_offset[static_cast<size_t>(blk)] = total;
    total += block_count[static_cast<size_t>(blk)];
  }
  return dispatch_dtype(values.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto vv = values.data<T>();
    std::vector<T> out(static_cast<size_t>(total * m));
    b.parallel_for(blocks, 1, [&](int64_t lo, int64_t hi) {
      for (int64_t blk = lo; blk < hi; ++blk) {
        int64_t begin = blk * kBlock, end = std::min(begin + kBlock, n);
        int64_t w = block_offset[static_cast<size_t>(blk)];
        for (int64_t i = begin; i < end; ++i) {
          if (mv[static_cast<size_t>(i)]) {
            std::copy_n(vv.data() + i * m, m, out.data() + w * m);
            ++w;
          }
        }
      }
    });
    return Tensor::from_matrix(total, m, std::move(out));
  });
}

Tensor argsort_stable(const KernelBackend& b, const Tensor& keys) {
  require_vector("argsort_stable", keys);
  return dispatch_dtype(keys.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto kv = keys.data<T>();
    require_nan_free(b, "argsort_stable", kv);
    std::vector<int64_t> idx(kv.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int64_t a, int64_t c) {
      return kv[static_cast<size_t>(a)] < kv[static_cast<size_t>(c)];
    });
    return Tensor::from_vector(std::move(idx));
  });
}

Tensor gather(const KernelBackend& b, const Tensor& values, const Tensor& idx) {
  require_dtype("gather", idx, DType::Int64);
  require_vector("gather", idx);
  auto iv = idx.data<int64_t>();
  int64_t n = values.rows();
  int64_t m = values.cols();
  int64_t k = idx.rows();
  return dispatch_dtype(values.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto vv = values.data<T>();
    std::vector<T> out(static_cast<size_t>(k * m));
    FirstBadIndex bad;
    b.parallel_for(k, kElemGrain, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        int64_t j = iv[static_cast<size_t>(i)];
        if (j < 0 || j >= n) {
          bad.note(i);
          continue;
        }
        std::copy_n(vv.data() + j * m, m, out.data() + i * m);
      }
    });
    if (bad.any()) {
      int64_t p = bad.index();
      fail("gather: index " + std::to_string(iv[static_cast<size_t>(p)]) + " at position " +
           std::to_string(p) + " out of bounds [0," + std::to_string(n) + ")");
    }
    return Tensor::from_matrix(k, m, std::move(out));
  });
}

Tensor searchsorted(const KernelBackend& b, const Tensor& sorted, const Tensor& probes,
                    SearchSide side) {
  require_same_dtype("searchsorted", sorted, probes);
  require_vector("searchsorted", sorted);
  require_vector("searchsorted", probes);
  return dispatch_dtype(sorted.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto sv = sorted.data<T>();
    auto pv = probes.data<T>();
    require_nan_free(b, "searchsorted", sv);
    require_nan_free(b, "searchsorted", pv);
    for (size_t i = 1; i < sv.size(); ++i) {
      if (sv[i] < sv[i - 1]) {
        fail("searchsorted: input not non-decreasing at row " + std::to_string(i));
      }
    }
    std::vector<int64_t> out(pv.size());
    b.parallel_for(static_cast<int64_t>(pv.size()), 1024, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        T p = pv[static_cast<size_t>(i)];
        auto it = side == SearchSide::LEFT ? std::lower_bound(sv.begin(), sv.end(), p)
                                           : std::upper_bound(sv.begin(), sv.end(), p);
        out[static_cast<size_t>(i)] = it - sv.begin();
      }
    });
    return Tensor::from_vector(std::move(out));
  });
}

Tensor expand_segments(const KernelBackend& b, const Tensor& starts, const Tensor& counts) {
  require_dtype("expand_segments", starts, DType::Int64);
  require_dtype("expand_segments", counts, DType::Int64);
  require_vector("expand_segments", starts);
  require_vector("expand_segments", counts);
  if (starts.rows() != counts.rows()) fail("expand_segments: starts/counts length mismatch");
  auto sv = starts.data<int64_t>();
  auto cv = counts.data<int64_t>();
  int64_t k = starts.rows();
  std::vector<int64_t> offset(static_cast<size_t>(k) + 1, 0);
  for (int64_t i = 0; i < k; ++i) {
    int64_t c = cv[static_cast<size_t>(i)];
    if (c < 0) fail("expand_segments: negative count at row " + std::to_string(i));
    int64_t next;
    if (__builtin_add_overflow(offset[static_cast<size_t>(i)], c, &next)) {
      fail("expand_segments: total length overflow");
    }
    offset[static_cast<size_t>(i) + 1] = next;
  }
  int64_t total = offset[static_cast<size_t>(k)];
  std::vector<int64_t> out(static_cast<size_t>(total));
  b.parallel_for(k, 256, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      int64_t base = sv[static_cast<size_t>(i)];
      int64_t w = offset[static_cast<size_t>(i)];
      int64_t c = cv[static_cast<size_t>(i)];
      for (int64_t j = 0; j < c; ++j) out[static_cast<size_t>(w + j)] = base + j;
    }
  });
  return Tensor::from_vector(std::move(out));
}

Tensor segment_starts(const KernelBackend& b, const Tensor& sorted_keys) {
  int64_t n = sorted_keys.rows();
  int64_t m = sorted_keys.cols();
  return dispatch_dtype(sorted_keys.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto kv = sorted_keys.data<T>();
    std::vector<uint8_t> out(static_cast<size_t>(n));
    b.parallel_for(n, kElemGrain, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        if (i == 0) {
          out[0] = 1;
          continue;
        }
        bool differs = false;
        for (int64_t j = 0; j < m; ++j) {
          if (kv[static_cast<size_t>(i * m + j)] != kv[static_cast<size_t>((i - 1) * m + j)]) {
            differs = true;
            break;
          }
        }
        out[static_cast<size_t>(i)] = differs ? 1 : 0;
      }
    });
    return Tensor::from_vector(std::move(out));
  });
}

namespace {

struct SegmentRuns {
  // Half-open [lo, hi) value ranges per segment id; empty segments allowed.
  std::vector<int64_t> lo, hi;
};

SegmentRuns segment_runs(const Tensor& segment_ids, int64_t num_segments) {
  auto ids = segment_ids.data<int64_t>();
  int64_t n = segment_ids.rows();
  SegmentRuns runs;
  runs.lo.assign(static_cast<size_t>(num_segments), 0);
  runs.hi.assign(static_cast<size_t>(num_segments), 0);
  int64_t prev = -1;
  for (int64_t i = 0; i < n; ++i) {
    int64_t s = ids[static_cast<size_t>(i)];
    if (s < prev) fail("segmented_reduce: segment_ids decrease at row " + std::to_string(i));
    if (s < 0 || s >= num_segments) {
      fail("segmented_reduce: segment id " + std::to_string(s) + " out of range [0," +
           std::to_string(num_segments) + ") at row " + std::to_string(i));
    }
    if (s != prev) {
      for (int64_t g = prev + 1; g <= s; ++g) {
        runs.lo[static_cast<size_t>(g)] = i;
        runs.hi[static_cast<size_t>(g)] = i;
      }
      prev = s;
    }
    runs.hi[static_cast<size_t>(s)] = i + 1;
  }
  for (int64_t g = prev + 1; g < num_segments; ++g) {
    runs.lo[static_cast<size_t>(g)] = n;
    runs.hi[static_cast<size_t>(g)] = n;
  }
  return runs;
}

}  // namespace

Tensor segmented_reduce(const KernelBackend& b, const Tensor& values, const Tensor& segment_ids,
                        int64_t num_segments, ReduceOp op) {
  require_vector("segmented_reduce", values);
  require_dtype("segmented_reduce", segment_ids, DType::Int64);
  require_vector("segmented_reduce", segment_ids);
  if (values.rows() != segment_ids.rows()) {
    fail("segmented_reduce: values/segment_ids length mismatch");
  }
  if (num_segments < 0) fail("segmented_reduce: negative segment count");
  SegmentRuns runs = segment_runs(segment_ids, num_segments);

  if (op == ReduceOp::COUNT) {
    std::vector<int64_t> out(static_cast<size_t>(num_segments));
    for (int64_t s = 0; s < num_segments; ++s) {
      out[static_cast<size_t>(s)] = runs.hi[static_cast<size_t>(s)] - runs.lo[static_cast<size_t>(s)];
    }
    return Tensor::from_vector(std::move(out));
  }

  if (values.dtype() == DType::Bool) fail("segmented_reduce: bool values not supported");

  if (op == ReduceOp::MIN || op == ReduceOp::MAX) {
    for (int64_t s = 0; s < num_segments; ++s) {
      if (runs.lo[static_cast<size_t>(s)] == runs.hi[static_cast<size_t>(s)]) {
        fail(std::string("segmented_reduce: empty segment ") + std::to_string(s) + " for " +
             reduce_op_name(op));
      }
    }
    return dispatch_dtype(values.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto vv = values.data<T>();
      std::vector<T> out(static_cast<size_t>(num_segments));
      b.parallel_for(num_segments, 64, [&](int64_t slo, int64_t shi) {
        for (int64_t s = slo; s < shi; ++s) {
          T acc = vv[static_cast<size_t>(runs.lo[static_cast<size_t>(s)])];
          for (int64_t i = runs.lo[static_cast<size_t>(s)] + 1; i < runs.hi[static_cast<size_t>(s)];
               ++i) {
            T v = vv[static_cast<size_t>(i)];
            if constexpr (std::is_same_v<T, double>) {
              if (std::isnan(v) || std::isnan(acc)) {
                acc = std::numeric_limits<double>::quiet_NaN();
                continue;
              }
            }
            if (op == ReduceOp::MIN) {
              acc = v < acc ? v : acc;
            } else {
              acc = v > acc ? v : acc;
            }
          }
          out[static_cast<size_t>(s)] = acc;
        }
      });
      return Tensor::from_vector(std::move(out));
    });
  }

  // SUM. Float64 uses the backend's accumulation order; integers accumulate
  // in index order under both backends so overflow behavior coincides.
  if (values.dtype() == DType::Float64) {
    auto vv = values.data<double>();
    std::vector<double> out(static_cast<size_t>(num_segments), 0.0);
    for (int64_t s = 0; s < num_segments; ++s) {
      size_t lo = static_cast<size_t>(runs.lo[static_cast<size_t>(s)]);
      size_t len = static_cast<size_t>(runs.hi[static_cast<size_t>(s)]) - lo;
      out[static_cast<size_t>(s)] = b.sum_f64(vv.subspan(lo, len));
    }
    return Tensor::from_vector(std::move(out));
  }
  return dispatch_dtype(values.dtype(), [&](auto tag) -> Tensor {
    using T = decltype(tag);
    if constexpr (std::is_same_v<T, int32_t> || std::is_same_v<T, int64_t>) {
      auto vv = values.data<T>();
      std::vector<T> out(static_cast<size_t>(num_segments), T{0});
      for (int64_t s = 0; s < num_segments; ++s) {
        T acc = 0;
        for (int64_t i = runs.lo[static_cast<size_t>(s)]; i < runs.hi[static_cast<size_t>(s)]; ++i) {
          if (__builtin_add_overflow(acc, vv[static_cast<size_t>(i)], &acc)) {
            fail("segmented_reduce: sum overflow in segment " + std::to_string(s));
          }
        }
        out[static_cast<size_t>(s)] = acc;
      }
      return Tensor::from_vector(std::move(out));
    } else {
      fail("segmented_reduce: unsupported dtype");
    }
  });
}

Tensor matmul(const KernelBackend& b, const Tensor& a, const Tensor& rhs) {
  require_dtype("matmul", a, DType::Float64);
  require_dtype("matmul", rhs, DType::Float64);
  if (a.cols() != rhs.rows()) {
    fail("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
         std::to_string(rhs.rows()) + ")");
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> ma(a.data<double>().data(), a.rows(), a.cols());
  Eigen::Map<const RowMajor> mb(rhs.data<double>().data(), rhs.rows(), rhs.cols());
  std::vector<double> out(static_cast<size_t>(a.rows() * rhs.cols()));
  Eigen::Map<RowMajor> mo(out.data(), a.rows(), rhs.cols());
  b.parallel_for(a.rows(), 64, [&](int64_t lo, int64_t hi) {
    mo.middleRows(lo, hi - lo).noalias() = ma.middleRows(lo, hi - lo) * mb;
  });
  return Tensor::from_matrix(a.rows(), rhs.cols(), std::move(out));
}

Tensor substring_match(const KernelBackend& b, const Tensor& chars, std::string_view pattern,
                       MatchAnchor anchor) {
  require_dtype("substring_match", chars, DType::Int32);
  auto cv = chars.data<int32_t>();
  int64_t n = chars.rows();
  int64_t m = chars.cols();
  int64_t plen = static_cast<int64_t>(pattern.size());
  std::vector<uint8_t> out(static_cast<size_t>(n), 0);
  auto match_at = [&](const int32_t* row, int64_t offset) {
    for (int64_t j = 0; j < plen; ++j) {
      if (row[offset + j] != static_cast<int32_t>(static_cast<uint8_t>(pattern[static_cast<size_t>(j)]))) {
        return false;
      }
    }
    return true;
  };
  b.parallel_for(n, 4096, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      const int32_t* row = cv.data() + i * m;
      int64_t len = 0;
      while (len < m && row[len] != 0) ++len;
      bool ok = false;
      if (plen <= len) {
        switch (anchor) {
          case MatchAnchor::START: ok = match_at(row, 0); break;
          case MatchAnchor::END: ok = match_at(row, len - plen); break;
          case MatchAnchor::ANY:
            for (int64_t o = 0; o + plen <= len && !ok; ++o) ok = match_at(row, o);
            break;
          case MatchAnchor::EXACT: ok = len == plen && match_at(row, 0); break;
        }
      }
      out[static_cast<size_t>(i)] = ok ? 1 : 0;
    }
  });
  return Tensor::from_vector(std::move(out));
}

}  // namespace tensql
