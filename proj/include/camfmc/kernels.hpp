#pragma once

#include <cstddef>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace camfmc::kernels {

// Fixed block size for the reductions below. Serial and OpenMP variants sum
// the same 1024-element blocks in index order and combine the block sums with
// the same pairwise tree, so they are bit-identical for any thread count.
inline constexpr std::size_t kBlock = 1024;

double sum_serial(std::span<const double> x);
double sum_parallel(std::span<const double> x);

// Dispatches to the OpenMP variant when compiled with OpenMP.
double sum(std::span<const double> x);

double mean(std::span<const double> x);

// Pairwise combine of already-computed partials, in index order.
double tree_combine(std::vector<double> partials);

// out[i] = fn(i) for i in [0, count); iterations are independent.
template <class F>
void map_index_serial(std::size_t count, std::span<double> out, F&& fn) {
  for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
}

template <class F>
void map_index_parallel(std::size_t count, std::span<double> out, F&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(count); ++i)
    out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
#else
  map_index_serial(count, out, fn);
#endif
}

template <class F>
void map_index(std::size_t count, std::span<double> out, F&& fn) {
  map_index_parallel(count, out, fn);
}

}  // namespace camfmc::kernels
