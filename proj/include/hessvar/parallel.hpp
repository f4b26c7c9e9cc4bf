#pragma once
// Node-parallel loops. Work is split into a fixed number of chunks that does
// not depend on the thread count, and reductions combine per-chunk partials
// in chunk order, so results are identical for any number of threads.

#include <cstddef>
#include <functional>

namespace hessvar {

/// 0 restores the default (HESSVAR_THREADS, else hardware concurrency).
void set_thread_count(int threads);
int thread_count();

/// fn(begin, end) over a partition of [0, count).
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn);

/// Sum of fn(begin, end) over the same fixed partition, added in order.
double parallel_sum(std::size_t count, const std::function<double(std::size_t, std::size_t)>& fn);

/// Max of fn(begin, end) over the partition.
double parallel_max(std::size_t count, const std::function<double(std::size_t, std::size_t)>& fn);

}  // namespace hessvar
