#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace batfill {

// Runs fn(i) for i in [0, n) on up to `workers` threads with a static
// interleaved partition. Callers write results into per-index slots and
// reduce afterwards in index order, so output never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    const std::size_t used = std::min(workers, n);
    std::vector<std::exception_ptr> errors(used);
    std::vector<std::thread> threads;
    threads.reserve(used);
    for (std::size_t w = 0; w < used; ++w) {
        threads.emplace_back([&, w]() {
            try {
                for (std::size_t i = w; i < n; i += used) {
                    fn(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace batfill
