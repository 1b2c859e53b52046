#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace blmc {

/// Static-partition parallel loop over [0, n). Each index is handled by
/// exactly one thread and must write only to its own slots, so the result
/// is identical for any thread count. No reductions happen here.
template <class F>
void parallel_for(int n, int threads, F&& fn) {
  if (threads <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  int t = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(t));
  for (int w = 0; w < t; ++w) {
    int lo = static_cast<int>(static_cast<long long>(n) * w / t);
    int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / t);
    pool.emplace_back([lo, hi, &fn]() {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace blmc
