#pragma once
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace imcdse {

inline int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    unsigned h = std::thread::hardware_concurrency();
    return h ? int(h) : 1;
}

// fn(i) for i in [0, n). Items must write only to their own slots so the
// result does not depend on scheduling. First exception is rethrown.
template <class Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
    int nt = resolve_jobs(jobs);
    if (nt <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (size_t(nt) > n) nt = int(n);
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!err) err = std::current_exception();
                next = n;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace imcdse
