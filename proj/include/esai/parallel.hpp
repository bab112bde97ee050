#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace esai {

/// Worker count: ESAI_THREADS caps it, 0 or unset means auto.
inline int thread_count() {
  int n = 0;
  if (const char* env = std::getenv("ESAI_THREADS")) n = std::atoi(env);
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

/// Static range partition. Each index is processed by exactly one worker and
/// the per-index work is order-independent, so results do not depend on the
/// number of threads.
template <typename Fn>
void parallel_for(int64_t n, Fn&& fn) {
  const int workers = std::min<int64_t>(thread_count(), n);
  if (workers <= 1 || n < 2) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int64_t lo = w * chunk;
    const int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace esai
