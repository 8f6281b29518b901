#pragma once

/// @file parallel.hpp
/// @brief Static-partition parallel loop. Work is split into contiguous
/// chunks whose boundaries do not depend on the worker count, so any
/// accumulation done per chunk and merged in chunk order is bitwise
/// reproducible regardless of scheduling.

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace omg {

/// Worker-pool size: hardware concurrency, optionally capped by OMG_THREADS.
inline int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("OMG_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

/// Runs fn(begin, end) over disjoint subranges of [0, count).
/// Subrange boundaries are a function of count and chunk_hint only.
inline void parallel_chunks(std::size_t count, std::size_t chunk_hint,
                            const std::function<void(std::size_t, std::size_t)>& fn) {
    if (count == 0) return;
    const std::size_t chunk = std::max<std::size_t>(1, chunk_hint);
    const std::size_t nchunks = (count + chunk - 1) / chunk;
    const int workers = std::min<int>(worker_count(), static_cast<int>(nchunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < nchunks; ++c)
            fn(c * chunk, std::min(count, (c + 1) * chunk));
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t c = static_cast<std::size_t>(w); c < nchunks;
                 c += static_cast<std::size_t>(workers)) {
                fn(c * chunk, std::min(count, (c + 1) * chunk));
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace omg
