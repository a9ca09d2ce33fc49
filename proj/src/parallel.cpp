#include "jpo/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace jpo {

namespace {
std::atomic<std::size_t> g_threads{0};
// nested loops run inline on the calling worker
thread_local bool t_inside = false;
}

void set_thread_count(std::size_t n) { g_threads = n; }

std::size_t thread_count() {
    const std::size_t n = g_threads.load();
    if (n > 0) return n;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1 || t_inside) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        const bool outer = t_inside;
        t_inside = true;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                t_inside = outer;
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace jpo
