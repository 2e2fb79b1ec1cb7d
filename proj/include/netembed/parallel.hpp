#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace netembed {

inline int default_thread_count() {
    if (const char* env = std::getenv("NETEMBED_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Chunked self-scheduling loop. Results must be written into per-index slots
// by the body so the output is independent of the thread count.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                         int threads = 0) {
    if (threads <= 0) threads = default_thread_count();
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const std::size_t chunk = std::max<std::size_t>(1, count / (8 * static_cast<std::size_t>(threads)));
    auto worker = [&]() {
        while (true) {
            std::size_t begin = next.fetch_add(chunk);
            if (begin >= count) return;
            std::size_t end = std::min(count, begin + chunk);
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace netembed
