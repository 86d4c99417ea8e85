#include "voxelgeo/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace voxelgeo {

namespace {
std::atomic<int> g_num_threads{1};
}

void set_num_threads(int count) {
    g_num_threads.store(std::max(1, count));
}

int num_threads() {
    return g_num_threads.load();
}

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) {
        return;
    }
    const int threads =
        static_cast<int>(std::min<std::int64_t>(num_threads(), n));
    if (threads <= 1) {
        fn(0, n);
        return;
    }
    const std::int64_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        const std::int64_t begin = t * chunk;
        const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
        if (begin >= end) {
            break;
        }
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (std::thread& worker : pool) {
        worker.join();
    }
}

}  // namespace voxelgeo
