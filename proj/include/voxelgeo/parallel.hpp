#pragma once

#include <cstdint>
#include <functional>

namespace voxelgeo {

// Process-wide worker count used by parallel_for. Thread count never changes
// results: work is always split into contiguous chunks of independent
// elements, so any count produces identical output.
void set_num_threads(int count);
int num_threads();

// Runs fn(begin, end) over contiguous disjoint chunks covering [0, n).
// With threads <= 1 (or n small) the call runs inline on this thread.
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace voxelgeo
