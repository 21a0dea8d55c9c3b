#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace sthdg {

/// Worker count: 1 unless STHDG_THREADS raises it (capped by hardware).
inline int worker_count() {
    const char* env = std::getenv("STHDG_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (n < 1) n = 1;
    return n < hw ? n : hw;
}

/// Static-partition parallel loop over [0, n). Each worker owns a contiguous
/// index range, so per-slot writes are race-free and results are bitwise
/// reproducible for a fixed worker count.
inline void parallel_for(int n, const std::function<void(int begin, int end, int worker)>& body) {
    int workers = worker_count();
    if (workers <= 1 || n < 2 * workers) {
        body(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        int b = w * chunk;
        int e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&body, b, e, w] { body(b, e, w); });
    }
    for (auto& t : pool) t.join();
}

} // namespace sthdg
