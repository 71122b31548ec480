#pragma once

#include <cstddef>
#include <functional>

namespace gsr {

// Worker count used by parallel_for. 0 restores the default
// (GSR_THREADS if set, else hardware concurrency).
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Calls fn(i) for every i in [0, n). Work is handed out in fixed-size blocks;
// callers write results into per-index slots so output never depends on the
// worker count. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t block = 256);

}  // namespace gsr
