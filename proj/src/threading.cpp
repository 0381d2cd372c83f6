#include "sif/threading.hpp"

#include <atomic>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace sif {

namespace {
std::atomic<int> g_thread_cap{0};  // 0 = hardware default

int hardware_default() noexcept {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}
}  // namespace

void set_max_threads(int n) noexcept { g_thread_cap.store(n > 0 ? n : 0); }

int max_threads() noexcept {
    const int cap = g_thread_cap.load();
    return cap > 0 ? cap : hardware_default();
}

namespace detail {

void run_indexed(std::int64_t n, void* ctx, void (*body)(void*, std::int64_t), Exec exec) {
#if defined(_OPENMP)
    if (exec == Exec::parallel && n > 1) {
        const int nthreads = max_threads();
#pragma omp parallel for schedule(static) num_threads(nthreads)
        for (std::int64_t i = 0; i < n; ++i) body(ctx, i);
        return;
    }
#else
    (void)exec;
#endif
    for (std::int64_t i = 0; i < n; ++i) body(ctx, i);
}

}  // namespace detail

double pairwise_sum(std::span<const double> v) noexcept {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace sif
