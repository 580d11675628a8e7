#ifndef KSK_PARALLEL_HPP
#define KSK_PARALLEL_HPP

#include <cstddef>
#include <thread>
#include <vector>

namespace ksk {

// Static-partition parallel map over [0, n).  The body must only write to
// locations owned by its index (no shared accumulation), which keeps results
// bit-identical for every thread count.  Reductions are done sequentially by
// the callers after the map.
template <typename Fn>
void parallel_for(std::size_t n, int n_threads, Fn&& body) {
    if (n == 0) return;
    if (n_threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(n_threads), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &body]() {
            for (std::size_t i = begin; i < end; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace ksk

#endif
