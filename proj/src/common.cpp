#include "evgrid/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace evgrid {

int worker_count() {
    if (const char* env = std::getenv("EVGRID_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace {
thread_local bool inside_parallel_region = false;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int workers = worker_count();
    // nested regions run serially; the outer loop already owns the cores
    if (workers <= 1 || n <= 1 || inside_parallel_region) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(w);
    std::mutex guard;
    std::exception_ptr first_error;
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            inside_parallel_region = true;
            try {
                for (std::size_t i = t; i < n; i += w) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(guard);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string format_g(double v, int significant) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant, v);
    return buf;
}

}  // namespace evgrid
