#include "polymerlab/detail/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace polymerlab {

namespace {
int resolve_default_threads() {
  if (const char* env = std::getenv("POLYMERLAB_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}
std::atomic<int> g_threads{0};
}  // namespace

int thread_count() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n <= 0) {
    n = resolve_default_threads();
    g_threads.store(n, std::memory_order_relaxed);
  }
  return n;
}

void set_thread_count(int n) { g_threads.store(n > 0 ? n : 0, std::memory_order_relaxed); }

namespace detail {

void parallel_chunks(uint64_t n_items, uint64_t chunk_size,
                     const std::function<void(uint64_t, uint64_t, uint64_t)>& body) {
  if (n_items == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const uint64_t n_chunks = (n_items + chunk_size - 1) / chunk_size;
  const int workers = static_cast<int>(
      std::min<uint64_t>(static_cast<uint64_t>(thread_count()), n_chunks));
  if (workers <= 1) {
    for (uint64_t c = 0; c < n_chunks; ++c) {
      uint64_t lo = c * chunk_size;
      uint64_t hi = std::min(n_items, lo + chunk_size);
      body(c, lo, hi);
    }
    return;
  }
  std::atomic<uint64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        uint64_t c = next.fetch_add(1, std::memory_order_relaxed);
        if (c >= n_chunks) break;
        uint64_t lo = c * chunk_size;
        uint64_t hi = std::min(n_items, lo + chunk_size);
        body(c, lo, hi);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail
}  // namespace polymerlab
