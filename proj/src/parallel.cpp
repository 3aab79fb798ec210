#include "spar/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace spar {

namespace {

std::atomic<std::size_t> g_threads{0};

std::size_t default_threads()
{
    if (const char* env = std::getenv("SPAR_THREADS")) {
        try {
            auto n = std::stoul(env);
            if (n > 0) {
                return n;
            }
        } catch (const std::exception&) {
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

}  // namespace

std::size_t thread_count()
{
    auto n = g_threads.load();
    return n > 0 ? n : default_threads();
}

void set_thread_count(std::size_t n) { g_threads.store(n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn)
{
    auto workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                next.store(n);
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(run);
    }
    run();
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace spar
