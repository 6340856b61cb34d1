#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

// Block-parallel helper.  Work is cut into a fixed number of blocks that
// does not depend on the worker count, so any reduction done block-by-block
// in index order gives results independent of how many threads ran.

namespace chaoslab {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(block) for block = 0..nblocks-1 on up to `threads` workers.
template <typename Fn>
void parallel_for_blocks(std::size_t nblocks, int threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (threads <= 1 || nblocks <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            fn(b);
        }
    };
    std::vector<std::thread> pool;
    const int nw = static_cast<int>(std::min<std::size_t>(threads, nblocks));
    pool.reserve(nw);
    for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// Splits [0, n) into nblocks contiguous ranges.
inline std::pair<std::size_t, std::size_t> block_range(std::size_t n, std::size_t nblocks,
                                                       std::size_t block) {
    const std::size_t lo = n * block / nblocks;
    const std::size_t hi = n * (block + 1) / nblocks;
    return {lo, hi};
}

}  // namespace chaoslab
