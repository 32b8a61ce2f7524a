#pragma once

#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace spreadcert {

inline int worker_count() {
  if (const char* env = std::getenv("SPREADCERT_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs f(i) for i in [begin, end) on a fixed contiguous partition of the
/// range. Deterministic as long as iterations write disjoint slots; no
/// shared-state reduction happens here.
template <typename F>
void parallel_for(std::int64_t begin, std::int64_t end, F&& f) {
  const std::int64_t total = end - begin;
  if (total <= 0) return;
  const int workers = static_cast<int>(
      std::min<std::int64_t>(worker_count(), total));
  if (workers <= 1) {
    for (std::int64_t i = begin; i < end; ++i) f(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::int64_t chunk = (total + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = begin + w * chunk;
    const std::int64_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([lo, hi, &f] {
      for (std::int64_t i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& th : threads) th.join();
}

}  // namespace spreadcert
