#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dyadlab {

// Worker count: min(hardware, DYADLAB_THREADS if set).  Results must be
// written to per-index slots so that reports stay byte-identical whatever the
// thread count.
inline int thread_budget() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("DYADLAB_THREADS")) {
        long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
    }
    return static_cast<int>(hw);
}

template <typename F>
inline void parallel_for(long begin, long end, F&& fn) {
    const long count = end - begin;
    if (count <= 0) return;
    const int threads = static_cast<int>(std::min<long>(thread_budget(), count));
    if (threads <= 1 || count < 64) {
        for (long i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    const long chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long lo = begin + t * chunk;
        const long hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (long i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace dyadlab
