#pragma once

#include <cstddef>
#include <functional>

namespace seamgrid {

// Resolves a requested worker count: 0 means "use SEAMGRID_THREADS or
// hardware concurrency". Always returns at least 1.
int resolve_threads(int requested);

// Splits [0, n) into one contiguous chunk per worker and runs
// fn(begin, end, worker) on each. Chunk boundaries depend only on (n,
// threads), so per-worker partial results can be reduced in worker order
// to give bit-stable sums for a fixed thread count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t, int)>& fn);

}  // namespace seamgrid
