#ifndef IPCOMP_PARALLEL_HPP
#define IPCOMP_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ipcomp {

// worker count, capped by the IPCOMP_THREADS environment variable
inline int thread_cap() {
    if (const char *env = std::getenv("IPCOMP_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
}

// fn(index, worker_id) over [0, count); outputs must go to index-owned slots so
// the result is independent of the schedule. The first worker exception is
// rethrown on the calling thread. worker_id stays below max_workers.
template <class F>
void parallel_for(std::size_t count, int max_workers, F &&fn) {
    const int workers = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, max_workers)), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i, 0);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&](int wid) {
        for (std::size_t i; (i = next.fetch_add(1)) < count && !failed.load(std::memory_order_relaxed);) {
            try {
                fn(i, wid);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto &t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

template <class F>
void parallel_for(std::size_t count, F &&fn) {
    parallel_for(count, thread_cap(), std::forward<F>(fn));
}

}  // namespace ipcomp

#endif
