#ifndef POLYMERLAB_DETAIL_PARALLEL_HPP
#define POLYMERLAB_DETAIL_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace polymerlab {

// Global worker count. Defaults to POLYMERLAB_THREADS or hardware concurrency.
int thread_count();
void set_thread_count(int n);

namespace detail {

// Splits [0, n_items) into fixed-size chunks and runs `body(chunk_index, lo, hi)`
// on a worker pool. The chunking plan depends only on (n_items, chunk_size),
// never on the thread count, so per-chunk results can be reduced in chunk order
// to give thread-count-independent totals.
void parallel_chunks(uint64_t n_items, uint64_t chunk_size,
                     const std::function<void(uint64_t, uint64_t, uint64_t)>& body);

}  // namespace detail
}  // namespace polymerlab

#endif
