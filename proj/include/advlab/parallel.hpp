#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace advlab {

/// Split [0, n) into at most `threads` contiguous chunks and run
/// fn(chunk_index, lo, hi) for each, concurrently when threads > 1. Chunk
/// boundaries depend only on (n, threads), so per-item outputs are
/// placement-deterministic; callers that reduce across chunks must do so in
/// chunk order to stay bit-stable.
inline void parallel_for(int n, int threads,
                         const std::function<void(int chunk, int lo, int hi)>& fn) {
    if (n <= 0) return;
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        fn(0, 0, n);
        return;
    }
    const int chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([t, lo, hi, &fn] { fn(t, lo, hi); });
    }
    for (auto& th : pool) th.join();
}

inline int default_thread_count() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

} // namespace advlab
