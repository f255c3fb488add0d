#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace critiq {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(begin, end, block_index) over [0, n) split into fixed-size blocks.
// Blocks are claimed dynamically, so the partitioning of work onto threads —
// and therefore every per-block result — is independent of the thread count.
// Callers that reduce floating-point partials must do so in block order.
template <class Fn>
void parallel_blocks(std::int64_t n, std::int64_t block_size, int threads, Fn&& fn) {
    const std::int64_t n_blocks = (n + block_size - 1) / block_size;
    const int t = std::min<std::int64_t>(resolve_threads(threads), n_blocks > 0 ? n_blocks : 1);
    if (t <= 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b)
            fn(b * block_size, std::min(n, (b + 1) * block_size), b);
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
            if (b >= n_blocks) return;
            fn(b * block_size, std::min(n, (b + 1) * block_size), b);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace critiq
