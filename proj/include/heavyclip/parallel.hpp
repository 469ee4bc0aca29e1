#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace heavyclip {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work items must be
// independent; results keyed by index stay deterministic.
inline void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    int workers = static_cast<int>(std::min<long>(threads, n));
    std::exception_ptr error;
    std::mutex error_mu;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                long i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace heavyclip
