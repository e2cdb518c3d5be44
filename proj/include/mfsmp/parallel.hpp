#pragma once

#include <functional>
#include <span>
#include <utility>

namespace mfsmp {

// Worker count from MFS_WORKERS (default 1). It never changes results: parallel
// loops only write disjoint per-index outputs and all reductions are sequential.
int worker_count();
void set_worker_count(int workers);

// Calls fn(begin, end) on contiguous chunks of [0, n).
void parallel_for(int n, const std::function<void(int, int)>& fn);

// Left-to-right sums so that results do not depend on scheduling.
double ordered_sum(std::span<const double> values);
double ordered_mean(std::span<const double> values);
// Sample mean and (n-1)-normalized standard deviation.
std::pair<double, double> mean_and_sd(std::span<const double> values);

}  // namespace mfsmp
