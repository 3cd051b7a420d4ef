#include "griddispatch/parallel.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace griddispatch {

namespace {
int g_workers = 1; // serial unless a caller opts in
}

void set_worker_count(int n) {
    g_workers = n < 0 ? 1 : n;
}

int worker_count() {
#ifdef _OPENMP
    if (g_workers == 0) return omp_get_max_threads();
    return g_workers;
#else
    return 1;
#endif
}

bool parallel_enabled() {
#ifdef _OPENMP
    return worker_count() > 1;
#else
    return false;
#endif
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
    if (parallel_enabled() && n > 1) {
        const int threads = worker_count();
        // chunked dynamic schedule: coarse enough that tiny per-item work
        // is not drowned by dispatch overhead, fine enough to balance
        // uneven items (branch-and-bound solves vary a lot)
        const long long chunk = std::max<long long>(
            1, static_cast<long long>(n) / (8LL * threads));
#pragma omp parallel for schedule(dynamic, chunk) num_threads(threads)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            fn(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

} // namespace griddispatch
