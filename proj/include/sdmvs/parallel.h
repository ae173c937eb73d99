#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace sdmvs {

// Runs fn(begin, end) over [0, count) split into contiguous chunks, one per
// worker. Results must not depend on the split; callers write disjoint cells.
template <typename Fn>
void ParallelFor(int count, int threads, Fn&& fn) {
  if (count <= 0) return;
  const int workers = std::clamp(threads, 1, count);
  if (workers == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

// Worker count for a requested value; 0 means hardware concurrency.
inline int ResolveThreads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace sdmvs
