#pragma once

#include <cstdint>

namespace echopose {

// Worker count for the OpenMP kernels. Honors ECHOPOSE_WORKERS when set,
// otherwise the OpenMP default. Call once at process start.
void init_workers_from_env();
int worker_count();

// Deterministic parallel reduction: a fixed 64-way block partition whose
// partials are combined in block order, so the sum does not depend on the
// thread count or schedule.
inline constexpr int kSumBlocks = 64;

template <class F>
double block_sum(int64_t n, F&& term) {
  double partial[kSumBlocks];
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < kSumBlocks; ++blk) {
    const int64_t lo = n * blk / kSumBlocks;
    const int64_t hi = n * (blk + 1) / kSumBlocks;
    double s = 0.0;
    for (int64_t i = lo; i < hi; ++i) s += term(i);
    partial[blk] = s;
  }
  double total = 0.0;
  for (int blk = 0; blk < kSumBlocks; ++blk) total += partial[blk];
  return total;
}

}  // namespace echopose
