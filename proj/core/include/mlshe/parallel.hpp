#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mlshe::parallel {

// Process-wide worker count used when a call does not pass one explicitly.
// Results never depend on this value; every parallel loop writes by index.
void set_default_threads(unsigned threads);
unsigned default_threads();

// Runs body(i) for i in [0, n) on up to `threads` workers. Work is claimed
// dynamically, so bodies must write only to slots owned by their index.
// The first exception thrown by any body is rethrown after all workers join.
template <class Body>
void for_each_index(std::size_t n, Body&& body, unsigned threads = 0) {
    if (n == 0) return;
    if (threads == 0) threads = default_threads();
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace mlshe::parallel
