#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace lakelabel {

// Static round-robin parallel map over [0, count): task g runs on worker
// g % workers and writes only its own output slot, so results are
// schedule-independent. The first exception wins and is rethrown.
inline void parallel_for(std::size_t count, std::size_t max_workers,
                         const std::function<void(std::size_t)>& body) {
    std::size_t workers = std::min(count, max_workers == 0 ? std::size_t{1} : max_workers);
    if (workers <= 1) {
        for (std::size_t g = 0; g < count; ++g) body(g);
        return;
    }
    std::vector<std::thread> threads;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
            for (std::size_t g = w; g < count; g += workers) {
                try {
                    body(g);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline std::size_t hardware_workers() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace lakelabel
