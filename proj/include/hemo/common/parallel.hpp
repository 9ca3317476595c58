#pragma once

#include <cstdlib>
#include <cstdint>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hemo {

// Thread-count policy shared by all batch kernels.
//   HEMO_THREADS=<n>       caps the OpenMP width
//   HEMO_DETERMINISTIC=1   forces the serial reference path everywhere
inline int effective_threads() {
#ifdef _OPENMP
    if (const char* det = std::getenv("HEMO_DETERMINISTIC"); det && det[0] == '1') return 1;
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("HEMO_THREADS")) {
        const int req = std::atoi(env);
        if (req >= 1 && req < n) n = req;
        if (req >= 1 && req > n) n = req;
    }
    return n;
#else
    return 1;
#endif
}

inline bool deterministic_mode() {
    const char* det = std::getenv("HEMO_DETERMINISTIC");
    return det && det[0] == '1';
}

// Parallel loop over [0, n). Items must be independent; with nthreads <= 1
// this degrades to the plain serial loop.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn, int nthreads = -1) {
    if (nthreads < 0) nthreads = effective_threads();
#ifdef _OPENMP
    if (nthreads > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
#endif
    for (std::int64_t i = 0; i < n; ++i) fn(i);
}

} // namespace hemo
