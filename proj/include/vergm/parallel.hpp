#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace vergm {

/// Worker count: explicit request > VERGM_WORKERS env > hardware concurrency.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("VERGM_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(job_index) for job_index in [0, n_jobs) on a bounded pool.
/// Jobs are claimed through an atomic counter; no job shares mutable state
/// with another, and result slots are the caller's responsibility, so any
/// scheduling order produces the same results. The first exception thrown by
/// a job is rethrown on the calling thread after all workers join.
template <typename Fn>
void run_jobs(std::int64_t n_jobs, int workers, Fn&& fn) {
  workers = resolve_workers(workers);
  if (n_jobs <= 0) return;
  if (workers == 1 || n_jobs == 1) {
    for (std::int64_t job = 0; job < n_jobs; ++job) fn(job);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::int64_t job = next.fetch_add(1, std::memory_order_relaxed);
      if (job >= n_jobs) return;
      try {
        fn(job);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n_jobs, std::memory_order_relaxed);  // drain remaining work
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = static_cast<int>(std::min<std::int64_t>(workers, n_jobs));
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Fixed partition of [0, n_items) into blocks of `block_size`. The block
/// layout depends only on n_items, never on the worker count, so reductions
/// that combine per-block results in block order are bitwise reproducible
/// across worker counts.
struct BlockPartition {
  std::int64_t n_items;
  std::int64_t block_size;

  std::int64_t n_blocks() const {
    return n_items == 0 ? 0 : (n_items + block_size - 1) / block_size;
  }
  std::int64_t begin(std::int64_t block) const { return block * block_size; }
  std::int64_t end(std::int64_t block) const {
    return std::min(n_items, (block + 1) * block_size);
  }
};

}  // namespace vergm
