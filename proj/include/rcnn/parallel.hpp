#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace rcnn {

inline int effective_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(begin, end) over contiguous chunks of [0, n). Results must not
// depend on the chunking: callers either write to disjoint per-index slots
// or reduce with an order-independent operator afterwards.
template <class Body>
void parallel_for(std::int64_t n, int threads, Body&& body) {
    threads = std::min<std::int64_t>(effective_threads(threads), n);
    if (threads <= 1) {
        if (n > 0) body(std::int64_t(0), n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const std::int64_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::int64_t begin = t * chunk;
        const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace rcnn
