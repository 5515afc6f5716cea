#pragma once

#include <cstddef>
#include <functional>

namespace rotbox {

// Worker count: ROTBOX_THREADS if set and positive, otherwise the hardware
// concurrency (at least 1).
unsigned worker_count();

// Calls fn(i) for every i in [0, n). Each index is visited exactly once;
// callers write results into per-index slots so output never depends on
// scheduling. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace rotbox
