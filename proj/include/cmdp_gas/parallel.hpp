#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace cmdp {

/// Worker cap from CMDP_GAS_THREADS (0 or unset: hardware concurrency).
inline unsigned worker_count() {
  unsigned n = 0;
  if (const char* env = std::getenv("CMDP_GAS_THREADS")) {
    try {
      n = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      n = 0;
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs fn(k) for k in [0, n). Work is handed out dynamically; callers write
/// results into slot k so aggregation order never depends on scheduling.
template <typename Fn>
void parallel_for(Eigen::Index n, Fn&& fn, unsigned workers = worker_count()) {
  if (n <= 0) return;
  workers = static_cast<unsigned>(std::min<Eigen::Index>(workers, n));
  if (workers <= 1) {
    for (Eigen::Index k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (Eigen::Index k; (k = next.fetch_add(1)) < n;) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cmdp
