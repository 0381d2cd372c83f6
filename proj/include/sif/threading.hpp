#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace sif {

// Execution mode for data-parallel kernels. Every kernel in this library has
// the property that serial and parallel execution produce bitwise-identical
// results: loop bodies write disjoint slots, and reductions use a fixed
// combination order that does not depend on the thread count.
enum class Exec { serial, parallel };

// Global worker cap (CLI --threads). n <= 0 restores the hardware default.
void set_max_threads(int n) noexcept;
int max_threads() noexcept;

namespace detail {
void run_indexed(std::int64_t n, void* ctx, void (*body)(void*, std::int64_t), Exec exec);
}

template <class F>
void parallel_for(std::int64_t n, Exec exec, F&& body) {
    F fn = std::forward<F>(body);
    detail::run_indexed(
        n, &fn, [](void* ctx, std::int64_t i) { (*static_cast<F*>(ctx))(i); }, exec);
}

// Fixed-tree pairwise summation; the tree depends only on the length, so the
// result is independent of thread count and identical across runs.
double pairwise_sum(std::span<const double> v) noexcept;

// Bucket count used by deterministic strided accumulations (sample k goes to
// bucket k % kReduceBuckets; buckets are combined in index order).
inline constexpr int kReduceBuckets = 16;

}  // namespace sif
