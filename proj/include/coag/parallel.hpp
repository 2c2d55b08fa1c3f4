#ifndef COAG_PARALLEL_HPP
#define COAG_PARALLEL_HPP

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace coag {

inline int worker_count() {
    if (const char* env = std::getenv("COAG_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(replica_index) for indices [0, count). All randomness must be
// derived from the index so the result set is independent of scheduling;
// callers reduce per-index results in a fixed order afterwards.
template <typename Fn>
void parallel_replicas(std::int64_t count, Fn&& fn) {
    const int workers = std::min<std::int64_t>(worker_count(), count);
    if (workers <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w)
        threads.emplace_back([&]() {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (auto& t : threads) t.join();
}

}  // namespace coag

#endif
