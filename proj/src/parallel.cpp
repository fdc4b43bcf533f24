#include "riesz/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace riesz {

int max_threads() {
    static int cached = [] {
        if (const char* env = std::getenv("RIESZFLOW_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1 : static_cast<int>(hc);
    }();
    return cached;
}

void parallel_blocks(long begin, long end, const std::function<void(long, long)>& fn) {
    long n = end - begin;
    if (n <= 0) return;
    int t = std::min<long>(max_threads(), n);
    if (t <= 1) {
        fn(begin, end);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(t);
    long chunk = (n + t - 1) / t;
    for (int k = 0; k < t; ++k) {
        long b = begin + k * chunk;
        long e = std::min(end, b + chunk);
        if (b >= e) break;
        workers.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& w : workers) w.join();
}

void parallel_for(long begin, long end, const std::function<void(long)>& fn) {
    parallel_blocks(begin, end, [&fn](long b, long e) {
        for (long i = b; i < e; ++i) fn(i);
    });
}

} // namespace riesz
