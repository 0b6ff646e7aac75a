#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dimlab {

// Worker cap: DIMLAB_THREADS if set, hardware concurrency otherwise.
inline int thread_cap() {
  if (const char* env = std::getenv("DIMLAB_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Static block partition; falls back to the calling thread when one worker
// suffices.  Bodies must be independent across indices.
template <class F>
void parallel_for(std::int64_t n, F&& body, int max_threads = 0) {
  int workers = max_threads > 0 ? std::min(max_threads, thread_cap()) : thread_cap();
  workers = static_cast<int>(std::min<std::int64_t>(workers, n));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    std::int64_t lo = n * w / workers;
    std::int64_t hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &body] {
      for (std::int64_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace dimlab
