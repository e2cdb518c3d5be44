#include "mfsmp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace mfsmp {

namespace {

int env_workers() {
    const char* raw = std::getenv("MFS_WORKERS");
    if (!raw) return 1;
    try {
        return std::max(1, std::stoi(raw));
    } catch (...) {
        return 1;
    }
}

std::atomic<int>& workers_slot() {
    static std::atomic<int> slot{env_workers()};
    return slot;
}

}  // namespace

int worker_count() { return workers_slot().load(); }

void set_worker_count(int workers) { workers_slot().store(std::max(1, workers)); }

void parallel_for(int n, const std::function<void(int, int)>& fn) {
    const int workers = std::min(worker_count(), n);
    if (workers <= 1 || n < 256) {
        if (n > 0) fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int begin = w * chunk, end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

double ordered_sum(std::span<const double> values) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
}

double ordered_mean(std::span<const double> values) {
    return values.empty() ? 0.0 : ordered_sum(values) / static_cast<double>(values.size());
}

std::pair<double, double> mean_and_sd(std::span<const double> values) {
    const double m = ordered_mean(values);
    if (values.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return {m, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

}  // namespace mfsmp
