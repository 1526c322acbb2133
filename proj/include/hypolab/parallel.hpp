#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hypolab {

// Worker count resolution: 0 = auto (hardware concurrency, at least 1).
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

// Run fn(block_index) for block_index in [0, n_blocks) across `workers`
// threads. Each block must write only its own result slot; the caller reduces
// the slots in index order afterwards, so outputs are independent of the
// worker count and of scheduling. The first exception thrown by any block is
// rethrown on the calling thread.
template <class Fn>
void parallel_blocks(long n_blocks, int workers, Fn&& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || n_blocks <= 1) {
    for (long b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::atomic<long> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr err = nullptr;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      try {
        for (long b = next.fetch_add(1); b < n_blocks && !stop.load(); b = next.fetch_add(1))
          fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mu);
        if (!err) err = std::current_exception();
        stop.store(true);
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace hypolab
