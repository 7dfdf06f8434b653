#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace i2c {

inline int hardware_threads() {
    if (const char* env = std::getenv("I2C_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(i) for i in [0, n). Work is split into contiguous ranges, one per
// thread; every index is computed by exactly one thread with a fixed
// per-index loop order, so results are bitwise independent of thread count.
// fn must write only to outputs owned by index i.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
    if (n <= 0) return;
    const int threads = std::min(hardware_threads(), n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace i2c
