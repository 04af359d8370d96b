#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace polymer {

// Runs fn(i) for i in [0, n). Each index is independent and writes only
// to its own output slot, so results are identical for any worker count;
// reductions over the slots happen afterwards in index order.
template <class F>
void parallel_for(long n, int workers, F&& fn) {
    if (workers <= 1 || n <= 1) {
        for (long i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<long>(workers, n));
    pool.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w)
        pool.emplace_back(body);
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace polymer
