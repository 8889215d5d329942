#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ir {

/// Worker cap from IR_THREADS (default: hardware concurrency, at least 1).
inline int worker_count() {
    if (const char* env = std::getenv("IR_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(block) for block in [0, blocks).  Blocks are statically strided
/// over workers; each block must only write its own output slot, which keeps
/// results independent of the worker count.
inline void parallel_for(std::size_t blocks, const std::function<void(std::size_t)>& body) {
    const auto workers = static_cast<std::size_t>(worker_count());
    if (workers <= 1 || blocks <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) body(b);
        return;
    }
    const std::size_t n = std::min(workers, blocks);
    std::vector<std::thread> pool;
    pool.reserve(n);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < n; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t b = w; b < blocks; b += n) body(b);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace ir
