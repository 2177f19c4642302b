// Serial vs OpenMP timing for the hot kernels and one end-to-end estimator.
// The two paths must agree bit-for-bit; this binary checks that too.
// Usage: camfmc_bench [--scale N]   (N = 1 shrinks the sizes for smoke runs)
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <memory>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "camfmc/allocate.hpp"
#include "camfmc/engine.hpp"
#include "camfmc/kernels.hpp"
#include "camfmc/rng.hpp"

using namespace camfmc;

namespace {

double seconds_of(const std::function<void()>& fn, int repeats) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / repeats;
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-28s %10.3f ms %10.3f ms %8.2fx  %s\n", name, serial * 1e3,
              parallel * 1e3, serial / parallel, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  long long scale = 16;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--scale") == 0 && i + 1 < argc)
      scale = std::atoll(argv[i + 1]);
  }
  const auto n_sum = static_cast<std::size_t>(scale) * 1000000;
  const auto n_batch = static_cast<std::size_t>(scale) * 250000;
  const int repeats = 3;

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  // Blocked pairwise sum.
  {
    std::vector<double> x(n_sum);
    for (std::size_t i = 0; i < n_sum; ++i)
      x[i] = rng::uniform01(1, i, 0) - 0.5;
    double a = 0.0, b = 0.0;
    const double ts = seconds_of([&] { a = kernels::sum_serial(x); }, repeats);
    const double tp = seconds_of([&] { b = kernels::sum_parallel(x); }, repeats);
    report("pairwise sum", ts, tp, a == b);
  }

  // Sample batch generation (counter RNG).
  {
    const engine::UniformBox box = engine::UniformBox::unit(8);
    std::unique_ptr<engine::SampleBatch> a, b;
    const double ts = seconds_of(
        [&] {
#ifdef _OPENMP
          omp_set_num_threads(1);
#endif
          a = std::make_unique<engine::SampleBatch>(7, n_batch, box);
        },
        repeats);
    const double tp = seconds_of(
        [&] {
#ifdef _OPENMP
          omp_set_num_threads(omp_get_num_procs());
#endif
          b = std::make_unique<engine::SampleBatch>(7, n_batch, box);
        },
        repeats);
    bool same = true;
    for (std::size_t i = 0; i < n_batch && same; i += 97)
      same = a->input(i)[0] == b->input(i)[0];
    report("sample batch", ts, tp, same);
  }

  // Synthetic model evaluation.
  {
    auto hi = std::make_shared<engine::SyntheticHighFidelity>(
        std::vector<double>{1.0, 0.8, 0.6, 0.4, 0.2, 0.1, 0.05, 0.025});
    const engine::SampleBatch batch(11, n_batch, engine::UniformBox::unit(8));
    std::vector<double> a, b;
    const double ts = seconds_of(
        [&] {
#ifdef _OPENMP
          omp_set_num_threads(1);
#endif
          a = hi->evaluate_batch(batch, n_batch, {});
        },
        repeats);
    const double tp = seconds_of(
        [&] {
#ifdef _OPENMP
          omp_set_num_threads(omp_get_num_procs());
#endif
          b = hi->evaluate_batch(batch, n_batch, {});
        },
        repeats);
    report("synthetic eval", ts, tp, a == b);
  }

  // End-to-end multi-fidelity estimate.
  {
    auto hi = std::make_shared<engine::SyntheticHighFidelity>(
        std::vector<double>{1.0, 0.8, 0.6, 0.4});
    auto lo = engine::synthetic_correlated(hi, 0.99, 0.01, "f1");
    allocate::Hierarchy h;
    h.stats = {{1.0, 1.0, std::sqrt(hi->exact_variance())},
               {0.01, 0.99, std::sqrt(lo->exact_variance())}};
    h.labels = {"f0", "f1"};
    const double p = static_cast<double>(scale) * 1000.0;
    const auto alloc = allocate::optimal_allocation(h, p);
    const std::vector<std::shared_ptr<engine::Model>> models{hi, lo};
    double a = 0.0, b = 0.0;
    auto run = [&]() {
      engine::BudgetLedger ledger;
      ledger.budget = p;
      const engine::SampleBatch batch(
          3, static_cast<std::size_t>(alloc.counts.back()),
          engine::UniformBox::unit(4));
      return engine::mfmc_estimate(models, alloc, batch, ledger).estimate;
    };
    const double ts = seconds_of(
        [&] {
#ifdef _OPENMP
          omp_set_num_threads(1);
#endif
          a = run();
        },
        repeats);
    const double tp = seconds_of(
        [&] {
#ifdef _OPENMP
          omp_set_num_threads(omp_get_num_procs());
#endif
          b = run();
        },
        repeats);
    report("mfmc estimate", ts, tp, a == b);
  }
  return 0;
}
