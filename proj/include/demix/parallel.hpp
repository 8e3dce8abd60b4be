#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace demix::parallel {

inline int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(i) for i in [0, n). Work is handed out in fixed-size chunks through
// an atomic cursor, so scheduling varies with thread count but the set of
// calls does not. Caller-side state must be independent per item or guarded.
inline void parallel_for(std::int64_t n, int threads,
                         const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  if (threads < 1) threads = 1;
  constexpr std::int64_t kChunk = 64;
  if (threads == 1 || n <= kChunk) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> cursor{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::int64_t begin = cursor.fetch_add(kChunk);
      if (begin >= n) break;
      const std::int64_t end = std::min(begin + kChunk, n);
      try {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Map-reduce over [0, n) with per-chunk accumulators merged in chunk order,
// so the reduction result is identical for every thread count (floating-point
// rounding included). Acc must be default-constructible.
template <typename Acc, typename ItemFn, typename MergeFn>
Acc chunked_accumulate(std::int64_t n, int threads, ItemFn&& item, MergeFn&& merge) {
  constexpr std::int64_t kChunk = 256;
  const std::int64_t chunks = n <= 0 ? 0 : (n + kChunk - 1) / kChunk;
  std::vector<Acc> partial(static_cast<std::size_t>(chunks));
  parallel_for(chunks, threads, [&](std::int64_t c) {
    Acc acc{};
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min(begin + kChunk, n);
    for (std::int64_t i = begin; i < end; ++i) item(acc, i);
    partial[static_cast<std::size_t>(c)] = acc;
  });
  Acc total{};
  for (const auto& acc : partial) merge(total, acc);
  return total;
}

// Streaming first/second moment accumulator for scalar samples.
struct MeanVar {
  std::int64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const MeanVar& other) {
    count += other.count;
    sum += other.sum;
    sum_sq += other.sum_sq;
  }
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
  double variance() const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double v = (sum_sq - sum * sum / n) / (n - 1.0);
    return v > 0.0 ? v : 0.0;
  }
  double std_error() const {
    return count == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(count));
  }
};

}  // namespace demix::parallel
