#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

namespace tensql {

// Execution policy behind the kernel set. Kernels are pure functions of their
// inputs; the backend decides how element ranges are partitioned across
// workers and how Float64 sums are accumulated. Integer/bool kernel outputs
// are bit-identical across backends; Float64 sums agree within 1e-9 relative
// because the parallel backend accumulates in fixed 4096-element chunks whose
// partials are combined left to right (run-to-run deterministic).
class KernelBackend {
 public:
  virtual ~KernelBackend() = default;
  virtual std::string_view name() const = 0;

  // Invokes fn(lo, hi) over a partition of [0, n); ranges are disjoint and
  // cover [0, n). fn must only write locations derived from its own range.
  virtual void parallel_for(int64_t n, int64_t grain,
                            const std::function<void(int64_t, int64_t)>& fn) const = 0;

  // Sum of a contiguous Float64 run under this backend's accumulation order.
  virtual double sum_f64(std::span<const double> values) const = 0;

  virtual int threads() const = 0;
};

class ReferenceBackend final : public KernelBackend {
 public:
  std::string_view name() const override { return "ref"; }
  void parallel_for(int64_t n, int64_t grain,
                    const std::function<void(int64_t, int64_t)>& fn) const override;
  double sum_f64(std::span<const double> values) const override;
  int threads() const override { return 1; }
};

class ThreadPool;

class ParallelBackend final : public KernelBackend {
 public:
  // threads == 0 picks std::thread::hardware_concurrency().
  explicit ParallelBackend(int threads = 0);
  ~ParallelBackend() override;

  std::string_view name() const override { return "par"; }
  void parallel_for(int64_t n, int64_t grain,
                    const std::function<void(int64_t, int64_t)>& fn) const override;
  double sum_f64(std::span<const double> values) const override;
  int threads() const override;

  static constexpr int64_t kReduceChunk = 4096;

 private:
  std::unique_ptr<ThreadPool> pool_;
};

// Shared process-wide backends for callers that do not manage lifetimes.
const KernelBackend& reference_backend();
const KernelBackend& parallel_backend();
const KernelBackend& backend_by_name(std::string_view name);

}  // namespace tensql
