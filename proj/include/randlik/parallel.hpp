#pragma once

#include <cstddef>
#include <functional>

namespace randlik {

// Number of worker threads: RANDLIK_THREADS when set (clamped to >= 1),
// otherwise std::thread::hardware_concurrency().
std::size_t worker_count();

// Runs fn(i) for i in [begin, end) across worker_count() threads.
// Indices are handed out dynamically, so fn must only write to per-index slots;
// with that discipline results are identical for every thread count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn);

}  // namespace randlik
