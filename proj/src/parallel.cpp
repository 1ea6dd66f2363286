#include "cpn/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cpn {

int worker_count() {
    static int cached = [] {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n < 1) n = 1;
        if (const char* env = std::getenv("CHARPROP_THREADS")) {
            int cap = std::atoi(env);
            if (cap >= 1 && cap < n) n = cap;
        }
        return n;
    }();
    return cached;
}

namespace {
thread_local bool inside_worker = false;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    int workers = worker_count();
    if (workers > n) workers = n;
    if (workers == 1 || inside_worker) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    auto run_range = [&](int begin, int end) {
        inside_worker = true;
        try {
            for (int i = begin; i < end; ++i) fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
        inside_worker = false;
    };

    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    int chunk = (n + workers - 1) / workers;
    for (int w = 1; w < workers; ++w) {
        int begin = w * chunk;
        int end = std::min(n, begin + chunk);
        if (begin < end) threads.emplace_back(run_range, begin, end);
    }
    run_range(0, std::min(n, chunk));
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace cpn
