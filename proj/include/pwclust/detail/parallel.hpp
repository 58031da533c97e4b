#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pwclust::detail {

/// Runs fn(i) for i in [0, count) on up to hardware_concurrency threads.
/// Work items must be independent; results keyed by i stay deterministic.
/// The first exception thrown by a work item is rethrown on the caller's
/// thread after the pool drains.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  unsigned workers = std::thread::hardware_concurrency();
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  if (workers > count) workers = static_cast<unsigned>(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);  // drain remaining work
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace pwclust::detail
