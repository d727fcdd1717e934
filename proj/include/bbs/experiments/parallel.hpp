#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace bbs::experiments {

/// 0 means one worker per hardware thread.
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Calls body(i) for i in [0, count) on up to `threads` workers. Tasks are
/// handed out in index order; callers write results into slot i, so output
/// never depends on scheduling. If any task throws, the exception from the
/// lowest failing index is rethrown after all workers stop.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::min(resolve_threads(threads), std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failed_index{count};
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      // Indices above a known failure are skipped; lower ones still run so
      // the reported error is the same for any thread count.
      if (i >= count || i > failed_index.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index.load()) {
          failed_index.store(i);
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bbs::experiments
