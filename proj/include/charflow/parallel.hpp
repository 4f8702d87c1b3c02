#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace charflow {

/// Worker count for parallel maps; 0 means automatic (CHARFLOW_THREADS, else
/// hardware concurrency).
void set_thread_count(unsigned n) noexcept;
unsigned thread_count() noexcept;

/// Calls fn(i) for i in [0, n) over contiguous index blocks, one per worker.
/// Results must be written to per-index slots so that the outcome does not
/// depend on the worker count. The exception of the lowest failing block is
/// rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
        pool.emplace_back([&, w, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace charflow
