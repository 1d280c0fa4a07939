#ifndef GWTREE_ESTIMATE_HPP
#define GWTREE_ESTIMATE_HPP

// Monte Carlo plumbing shared by the walk and spanning-tree estimators:
// the report record, a fixed-order summary and a small worker pool.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "random.hpp"

namespace gwtree {

struct EstimateReport {
  std::string quantity;
  double c = 0.0;
  double value = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n)
  std::int64_t n_samples = 0;
  std::int32_t K = 0;       // walk-length truncation (0 when not applicable)
  std::int32_t depth = 0;   // tree depth horizon (0 when not applicable)
  Key seed = 0;
  double wall_time = 0.0;   // seconds; excluded from reproducibility comparisons
  std::map<std::string, double> diagnostics;
};

struct Summary {
  double mean = 0.0;
  double std_error = 0.0;
};

namespace detail {

/// Pairwise sum; the association order depends only on the length.
inline double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

}  // namespace detail

inline Summary summarize(std::span<const double> x) {
  Summary s;
  if (x.empty()) return s;
  const auto n = static_cast<double>(x.size());
  s.mean = detail::pairwise_sum(x) / n;
  if (x.size() < 2) return s;
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - s.mean) * (x[i] - s.mean);
  s.std_error = std::sqrt(detail::pairwise_sum(sq) / (n - 1.0) / n);
  return s;
}

/// Worker count: GWTREE_THREADS if set, else `requested` if positive, else
/// the number of hardware threads.
inline unsigned resolve_threads(int requested = 0) {
  if (const char* env = std::getenv("GWTREE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  if (requested > 0) return static_cast<unsigned>(requested);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1U : hw;
}

/// Runs fn(i) for i in [0, n) on `threads` workers. Work is handed out in
/// contiguous blocks; results must be written to per-index slots so that the
/// outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::int64_t n, unsigned threads, Fn&& fn) {
  if (n <= 0) return;
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::int64_t>(n, 1024))));
  if (threads == 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    const std::int64_t begin = n * t / threads;
    const std::int64_t end = n * (t + 1) / threads;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace gwtree

#endif  // GWTREE_ESTIMATE_HPP
