#include "certdp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace certdp {

namespace {

std::atomic<unsigned> g_max_threads{1};
thread_local bool t_inside_worker = false;

}  // namespace

void set_max_threads(unsigned n) { g_max_threads.store(std::max(1u, n)); }

unsigned max_threads() { return g_max_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t min_chunk) {
    min_chunk = std::max<std::size_t>(1, min_chunk);
    const unsigned cap = g_max_threads.load();
    if (cap <= 1 || t_inside_worker || n <= min_chunk) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    const std::size_t chunks = (n + min_chunk - 1) / min_chunk;
    const std::size_t workers = std::min<std::size_t>(cap, chunks);

    std::atomic<std::size_t> next_chunk{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto run = [&] {
        t_inside_worker = true;
        for (;;) {
            const std::size_t c = next_chunk.fetch_add(1);
            if (c >= chunks || failed.load()) break;
            const std::size_t lo = c * min_chunk;
            const std::size_t hi = std::min(n, lo + min_chunk);
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
            }
        }
        t_inside_worker = false;
    };

    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
        run();
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace certdp
