#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cpt {

/// Run fn(i) for i in [0, n) on up to n_workers threads.  Work items must be
/// independent (each derives its own RNG stream), so results cannot depend on
/// scheduling.  The first exception thrown by any item is rethrown after all
/// workers finish.
inline void parallel_for(long long n, int n_workers, const std::function<void(long long)>& fn) {
  if (n <= 0) return;
  if (n_workers <= 1 || n == 1) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const long long i = next.fetch_add(1);
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
  const int count = int(std::min<long long>(n, n_workers));
  pool.reserve(std::size_t(count));
  for (int w = 0; w < count; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cpt
