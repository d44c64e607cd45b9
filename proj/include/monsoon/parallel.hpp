#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace monsoon {

enum class Exec { serial, parallel };

// Worker cap: min(OMP max threads, MONSOON_BENCH_THREADS if set).
int worker_count();
void apply_thread_env();

// Runs fn(i) for i in [0, n). With Exec::parallel the iterations are spread
// over OpenMP threads; every iteration writes only its own slot, so the
// result is identical to the serial path.
template <typename Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            fn(static_cast<std::size_t>(i));
        return;
#endif
    }
    for (std::size_t i = 0; i < n; ++i)
        fn(i);
}

// Deterministic blocked sum-reduction: [0, n) is cut into fixed-size blocks,
// each block accumulates into its own buffer (blocks may run on any thread),
// then block buffers are combined serially in block order. The floating-point
// result is bit-identical for any thread count, including the serial path.
//
// accumulate(i, acc): add item i into acc (a double buffer of size `width`).
template <typename AccFn>
void blocked_sum(std::size_t n, std::size_t width, std::size_t block_size, Exec exec,
                 AccFn&& accumulate, std::vector<double>& out) {
    out.assign(width, 0.0);
    if (n == 0) return;
    const std::size_t nblocks = (n + block_size - 1) / block_size;
    std::vector<std::vector<double>> partial(nblocks);
    for_each_index(nblocks, exec, [&](std::size_t b) {
        auto& acc = partial[b];
        acc.assign(width, 0.0);
        const std::size_t lo = b * block_size;
        const std::size_t hi = std::min(n, lo + block_size);
        for (std::size_t i = lo; i < hi; ++i)
            accumulate(i, acc);
    });
    for (std::size_t b = 0; b < nblocks; ++b)
        for (std::size_t k = 0; k < width; ++k)
            out[k] += partial[b][k];
}

} // namespace monsoon
