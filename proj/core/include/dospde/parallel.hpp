#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace dospde {

/// Runs fn over [0, n) split into contiguous chunks, one per worker. Callers
/// write results into preallocated per-index slots and reduce sequentially
/// afterwards, so outcomes never depend on scheduling. workers = 0 picks the
/// hardware concurrency.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                         std::size_t workers = 0) {
  if (n == 0) return;
  if (workers == 0) {
    workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (n < 256) workers = 1;
  }
  workers = std::min(workers, n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace dospde
