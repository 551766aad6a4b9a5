#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace coarse {

/// Worker count used by every parallel loop in the library. Results never
/// depend on it: work is split into fixed chunks and reduced in index order.
int parallelism();
void set_parallelism(int threads);

/// Calls body(i) for i in [0, n). Each index is handled exactly once; the
/// first exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Maps every index to a value and returns them in index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& fn) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace coarse
