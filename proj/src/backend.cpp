#include "tensql/backend.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <latch>
#include <stdexcept>

#include "tensql/tensor.hpp"

namespace tensql {

void ReferenceBackend::parallel_for(int64_t n, int64_t /*grain*/,
                                    const std::function<void(int64_t, int64_t)>& fn) const {
  if (n > 0) fn(0, n);
}

double ReferenceBackend::sum_f64(std::span<const double> values) const {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

// Fixed pool of workers fed from a shared queue. parallel_for blocks until
// every submitted range completed; the first exception thrown by a range is
// rethrown on the calling thread.
class ThreadPool {
 public:
  explicit ThreadPool(int threads) {
    workers_.reserve(static_cast<size_t>(threads));
    for (int i = 0; i < threads; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  int size() const { return static_cast<int>(workers_.size()); }

  void run_ranges(const std::vector<std::pair<int64_t, int64_t>>& ranges,
                  const std::function<void(int64_t, int64_t)>& fn) {
    std::latch done(static_cast<ptrdiff_t>(ranges.size()));
    std::exception_ptr first_error;
    std::mutex error_mu;
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (const auto& [lo, hi] : ranges) {
        queue_.emplace_back([&, lo = lo, hi = hi] {
          try {
            fn(lo, hi);
          } catch (...) {
            std::lock_guard<std::mutex> elock(error_mu);
            if (!first_error) first_error = std::current_exception();
          }
          done.count_down();
        });
      }
    }
    cv_.notify_all();
    // The calling thread drains the queue too instead of idling.
    while (!done.try_wait()) {
      std::function<void()> task;
      {
        std::unique_lock<std::mutex> lock(mu_);
        if (!queue_.empty()) {
          task = std::move(queue_.front());
          queue_.pop_front();
        }
      }
      if (task) {
        task();
      } else {
        done.wait();
        break;
      }
    }
    done.wait();
    if (first_error) std::rethrow_exception(first_error);
  }

 private:
  void worker_loop() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
        if (stop_ && queue_.empty()) return;
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      task();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stop_ = false;
  std::vector<std::thread> workers_;
};

ParallelBackend::ParallelBackend(int threads) {
  int n = threads;
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  pool_ = std::make_unique<ThreadPool>(n);
}

ParallelBackend::~ParallelBackend() = default;

int ParallelBackend::threads() const { return pool_->size(); }

void ParallelBackend::parallel_for(int64_t n, int64_t grain,
                                   const std::function<void(int64_t, int64_t)>& fn) const {
  if (n <= 0) return;
  if (grain < 1) grain = 1;
  int64_t pieces = std::min<int64_t>(pool_->size(), (n + grain - 1) / grain);
  if (pieces <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::pair<int64_t, int64_t>> ranges;
  ranges.reserve(static_cast<size_t>(pieces));
  int64_t step = (n + pieces - 1) / pieces;
  for (int64_t lo = 0; lo < n; lo += step) {
    ranges.emplace_back(lo, std::min(lo + step, n));
  }
  pool_->run_ranges(ranges, fn);
}

double ParallelBackend::sum_f64(std::span<const double> values) const {
  int64_t n = static_cast<int64_t>(values.size());
  if (n <= kReduceChunk) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  int64_t chunks = (n + kReduceChunk - 1) / kReduceChunk;
  std::vector<double> partials(static_cast<size_t>(chunks), 0.0);
  parallel_for(chunks, 1, [&](int64_t lo, int64_t hi) {
    for (int64_t c = lo; c < hi; ++c) {
      int64_t begin = c * kReduceChunk;
      int64_t end = std::min(begin + kReduceChunk, n);
      double acc = 0.0;
      for (int64_t i = begin; i < end; ++i) acc += values[static_cast<size_t>(i)];
      partials[static_cast<size_t>(c)] = acc;
    }
  });
  double acc = 0.0;
  for (double p : partials) acc += p;
  return acc;
}

const KernelBackend& reference_backend() {
  static ReferenceBackend b;
  return b;
}

const KernelBackend& parallel_backend() {
  static ParallelBackend b;
  return b;
}

const KernelBackend& backend_by_name(std::string_view name) {
  if (name == "ref") return reference_backend();
  if (name == "par") return parallel_backend();
  throw std::invalid_argument("unknown backend '" + std::string(name) + "' (expected ref|par)");
}

}  // namespace tensql
