#pragma once

#include <cstddef>
#include <functional>

namespace m2m {

// Worker cap: M2M_THREADS when set (>= 1), otherwise logical cores.
int worker_count();

// Runs fn(0..n-1) across workers. Each index must be independent and write
// only to its own output slot; reductions stay deterministic because callers
// combine slots in index order afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace m2m
