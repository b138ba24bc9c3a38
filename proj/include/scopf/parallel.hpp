#pragma once

#include <algorithm>
#include <future>
#include <thread>
#include <vector>

namespace scopf {

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n). Work items must be independent and write only
// to per-index storage, so the result is identical for any thread count.
template <class Fn>
void parallel_for(long n, int threads, Fn&& fn) {
  threads = std::min<long>(resolve_threads(threads), n);
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> futs;
  futs.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    futs.push_back(std::async(std::launch::async, [&, t] {
      for (long i = t; i < n; i += threads) fn(i);
    }));
  }
  for (auto& f : futs) f.get();
}

}  // namespace scopf
