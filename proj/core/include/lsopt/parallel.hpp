#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace lsopt {

// Worker count for parallel sections: hardware concurrency unless the
// LSOPT_WORKERS environment variable overrides it.
inline int worker_count() {
  if (const char* env = std::getenv("LSOPT_WORKERS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n). Tasks must write only to caller-owned slots
// indexed by i so results are identical for any worker count. The first
// exception thrown by a task is rethrown after all workers finish.
inline void parallel_for(long long n, const std::function<void(long long)>& fn,
                         int workers = 0) {
  if (workers <= 0) workers = worker_count();
  if (workers > n) workers = static_cast<int>(n);
  if (n <= 0) return;
  if (workers <= 1) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      long long i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int k = 0; k < workers; ++k) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace lsopt
