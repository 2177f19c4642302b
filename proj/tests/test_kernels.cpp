#include <doctest.h>

#include <random>
#include <vector>

#include "camfmc/kernels.hpp"
#include "camfmc/rng.hpp"

using namespace camfmc;

TEST_CASE("serial and parallel sums are bit-identical") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> dist(-1e3, 1e3);
  const std::size_t sizes[] = {0, 1, 5, 1023, 1024, 1025, 100000};
  for (const std::size_t n : sizes) {
    std::vector<double> x(n);
    for (auto& v : x) v = dist(gen);
    const double a = kernels::sum_serial(x);
    const double b = kernels::sum_parallel(x);
    CHECK(a == b);
  }
}

TEST_CASE("blocked sum is accurate") {
  std::vector<double> x(50000, 0.1);
  const double s = kernels::sum(x);
  CHECK(s == doctest::Approx(5000.0).epsilon(1e-12));
}

TEST_CASE("map_index serial and parallel agree") {
  const std::size_t n = 4097;
  std::vector<double> a(n), b(n);
  auto fn = [](std::size_t i) { return std::sin(static_cast<double>(i)) * 0.5; };
  kernels::map_index_serial(n, a, fn);
  kernels::map_index_parallel(n, b, fn);
  CHECK(a == b);
}

TEST_CASE("counter rng is deterministic and uniform-ish") {
  CHECK(rng::uniform01(42, 0, 0) == rng::uniform01(42, 0, 0));
  CHECK(rng::uniform01(42, 0, 0) != rng::uniform01(43, 0, 0));
  CHECK(rng::uniform01(42, 1, 0) != rng::uniform01(42, 0, 1));

  double sum = 0.0;
  double min = 1.0, max = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng::uniform01(123, static_cast<std::uint64_t>(i), 2);
    sum += u;
    min = std::min(min, u);
    max = std::max(max, u);
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(min >= 0.0);
  CHECK(max < 1.0);
  CHECK(min < 0.001);
  CHECK(max > 0.999);
}

TEST_CASE("derive_seed separates substreams") {
  CHECK(rng::derive_seed(1, 2) != rng::derive_seed(1, 3));
  CHECK(rng::derive_seed(1, 2) != rng::derive_seed(2, 2));
}
