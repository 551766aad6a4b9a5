#include "coarse/parallel.hpp"

#include <atomic>
#include <mutex>

namespace coarse {

namespace {
std::atomic<int> g_threads{1};
}

int parallelism() { return g_threads.load(); }

void set_parallelism(int threads) { g_threads.store(std::max(1, threads)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  auto workers = static_cast<std::size_t>(parallelism());
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  workers = std::min(workers, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace coarse
