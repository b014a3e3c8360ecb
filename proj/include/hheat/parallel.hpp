#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace hheat {

/// Worker count from HHEAT_THREADS (0 or unset = hardware concurrency),
/// unless overridden by set_worker_count.
std::size_t worker_count();

/// 0 restores the environment default.
void set_worker_count(std::size_t n);

/// Calls body(i) for i in [0, n) on up to worker_count() threads. Work is
/// handed out in fixed blocks; body must only write to slot i of its outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Pairwise summation; the result depends only on the values and their order.
double pairwise_sum(std::span<const double> v);

}  // namespace hheat
