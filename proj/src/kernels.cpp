#include "camfmc/kernels.hpp"

namespace camfmc::kernels {

namespace {

double block_sum(std::span<const double> x, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += x[i];
  return s;
}

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

}  // namespace

double tree_combine(std::vector<double> partials) {
  if (partials.empty()) return 0.0;
  std::size_t n = partials.size();
  while (n > 1) {
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i)
      partials[i] = partials[2 * i] + partials[2 * i + 1];
    if (n % 2 == 1) {
      partials[half] = partials[n - 1];
      n = half + 1;
    } else {
      n = half;
    }
  }
  return partials[0];
}

double sum_serial(std::span<const double> x) {
  const std::size_t nb = block_count(x.size());
  if (nb == 0) return 0.0;
  std::vector<double> partials(nb);
  for (std::size_t b = 0; b < nb; ++b)
    partials[b] = block_sum(x, b * kBlock, std::min(x.size(), (b + 1) * kBlock));
  return tree_combine(std::move(partials));
}

double sum_parallel(std::span<const double> x) {
  const std::size_t nb = block_count(x.size());
  if (nb == 0) return 0.0;
  std::vector<double> partials(nb);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long b = 0; b < static_cast<long long>(nb); ++b) {
    const auto ub = static_cast<std::size_t>(b);
    partials[ub] = block_sum(x, ub * kBlock, std::min(x.size(), (ub + 1) * kBlock));
  }
  return tree_combine(std::move(partials));
}

double sum(std::span<const double> x) {
#ifdef _OPENMP
  return sum_parallel(x);
#else
  return sum_serial(x);
#endif
}

double mean(std::span<const double> x) {
  return x.empty() ? 0.0 : sum(x) / static_cast<double>(x.size());
}

}  // namespace camfmc::kernels
