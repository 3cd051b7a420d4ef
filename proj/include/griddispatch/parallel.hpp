#pragma once

#include <cstddef>
#include <functional>

namespace griddispatch {

// Process-wide worker count for the OpenMP kernels.
//   0  -> use the OpenMP default (all cores)
//   1  -> strictly serial (the reference path, also the ctest default)
//   n  -> n workers
// Every parallel kernel in the library partitions work so its numeric
// result is identical for any setting; see tests/test_util.cpp.
void set_worker_count(int n);
int worker_count();
bool parallel_enabled();

// Runs fn(i) for i in [0, n). Iterations must be independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace griddispatch
