#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace lumi {

/// Static block partition of [0, n) over `threads` workers. Work items must be
/// independent; the partition (and therefore any per-thread accumulation
/// order) depends only on n and the thread count.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(std::int64_t(n) * w / workers);
    const int end = static_cast<int>(std::int64_t(n) * (w + 1) / workers);
    pool.emplace_back([begin, end, &fn] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace lumi
