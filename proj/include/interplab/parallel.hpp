#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace interplab {

/// Worker count: hardware concurrency, capped by INTERPLAB_THREADS when set.
std::size_t worker_count();

namespace detail {
inline thread_local bool in_worker = false;
}

/// Runs fn(i) for i in [0, n) on up to worker_count() threads and returns the
/// results in index order. The first exception thrown by any task is rethrown.
/// Calls made from inside a worker run serially.
template <class R, class Fn>
std::vector<R> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<R> out(n);
  const std::size_t workers = detail::in_worker ? 1 : std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr error;
  auto loop = [&] {
    detail::in_worker = true;
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= n || error) return;
        i = next++;
      }
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace interplab
