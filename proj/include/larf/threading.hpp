#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace larf {

// Resolves a worker count: explicit request > LARF_THREADS > hardware.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LARF_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, count). Work items must be independent; each item
// writes only to its own output slot, so the result is identical for any
// worker count.
inline void parallel_for(std::size_t count, int n_threads,
                         const std::function<void(std::size_t)>& fn) {
    n_threads = resolve_threads(n_threads);
    if (n_threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(n_threads), count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= count) break;
                    fn(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
                next.store(count);
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace larf
