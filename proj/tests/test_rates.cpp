#include <doctest.h>

#include <cmath>
#include <random>

#include "camfmc/errors.hpp"
#include "camfmc/rates.hpp"
#include "oracles.hpp"

using namespace camfmc;
using rates::Family;
using rates::FitFamily;
using rates::RateModel;
using rates::Role;

namespace {

// Published constants used across the suites.
const RateModel kRbAccuracy{Family::exponential, Role::accuracy, 0.6312, 0.5754};
const RateModel kSgAccuracy{Family::algebraic, Role::accuracy, 0.3361, 0.8617};
const RateModel kDnnAccuracy{Family::algebraic, Role::accuracy, 0.1399, 0.2180};

rates::PilotSeries series_from_model(const RateModel& m,
                                     const std::vector<double>& ns) {
  rates::PilotSeries s;
  s.kind = m.role == Role::accuracy ? rates::ValueKind::accuracy_gap
                                    : rates::ValueKind::cost;
  for (const double n : ns) s.points.push_back({n, rates::eval_rate(m, n)});
  return s;
}

}  // namespace

TEST_CASE("eval_rate closed forms") {
  // Exponential accuracy at the trained size reported for the reduced-basis
  // model: 0.6312 * exp(-0.5754 * 18) matches the published 2.0061e-5 to the
  // rounding of the published constants.
  const double v = rates::eval_rate(kRbAccuracy, 18.0);
  CHECK(v == doctest::Approx(0.6312 * std::exp(-0.5754 * 18.0)).epsilon(1e-14));
  CHECK(v == doctest::Approx(2.0061e-5).epsilon(2e-3));

  CHECK(rates::eval_rate({Family::algebraic, Role::cost, 1.0, 1.0}, 7.0) == 7.0);

  // High-precision independent evaluation in long double.
  const long double expect =
      0.3361L * std::exp(-0.8617L * std::log(100.0L));
  CHECK(rates::eval_rate(kSgAccuracy, 100.0) ==
        doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
}

TEST_CASE("eval_rate rejects non-positive n") {
  CHECK_THROWS_AS(rates::eval_rate(kRbAccuracy, 0.0), std::domain_error);
  CHECK_THROWS_AS(rates::eval_rate(kRbAccuracy, -3.0), std::domain_error);
  CHECK_THROWS_AS(rates::eval_rate_deriv(kRbAccuracy, 0.0, 1), std::domain_error);
}

TEST_CASE("eval_rate_deriv closed forms") {
  CHECK(rates::eval_rate_deriv({Family::algebraic, Role::cost, 1.0, 2.0}, 3.0, 2) ==
        doctest::Approx(2.0).epsilon(1e-14));

  const double d1 = rates::eval_rate_deriv(kRbAccuracy, 10.0, 1);
  CHECK(d1 == doctest::Approx(-0.6312 * 0.5754 * std::exp(-5.754)).epsilon(1e-12));
  auto f_rb = [&](double n) { return rates::eval_rate(kRbAccuracy, n); };
  CHECK(d1 == doctest::Approx(oracle::fd1(f_rb, 10.0, 1e-5)).epsilon(1e-6));

  const double d2 = rates::eval_rate_deriv(kDnnAccuracy, 50.0, 2);
  CHECK(d2 == doctest::Approx(0.1399 * 0.2180 * 1.2180 *
                              std::pow(50.0, -2.2180)).epsilon(1e-12));
  auto f_dnn = [&](double n) { return rates::eval_rate(kDnnAccuracy, n); };
  CHECK(d2 == doctest::Approx(oracle::fd2(f_dnn, 50.0, 1e-3)).epsilon(1e-5));
}

TEST_CASE("derivatives match finite differences over randomized models") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> exp_dist(0.05, 3.0);
  std::uniform_real_distribution<double> scale_dist(1e-6, 10.0);
  std::uniform_real_distribution<double> log_n(0.0, std::log(1e5));
  for (int trial = 0; trial < 200; ++trial) {
    RateModel m;
    m.family = trial % 2 ? Family::algebraic : Family::exponential;
    m.role = (trial / 2) % 2 ? Role::accuracy : Role::cost;
    m.scale = scale_dist(gen);
    m.exponent = exp_dist(gen);
    double n = std::exp(log_n(gen));
    if (m.family == Family::exponential) {
      // Keep exp(e*n) in range.
      n = std::min(n, 500.0 / m.exponent);
    }
    auto f = [&](double x) { return rates::eval_rate(m, x); };
    const double h = std::max(n * 1e-5, 1e-7);
    const double d1 = rates::eval_rate_deriv(m, n, 1);
    CHECK(d1 == doctest::Approx(oracle::fd1(f, n, h)).epsilon(1e-5));

    CHECK(rates::eval_rate(m, n) > 0.0);
    if (m.role == Role::accuracy)
      CHECK(d1 < 0.0);
    else
      CHECK(d1 > 0.0);
  }
}

TEST_CASE("second derivative signs by family") {
  // Accuracy rates are strictly convex in both families; algebraic cost rates
  // flip convexity at exponent 1. This sign feeds the budget convexity check.
  CHECK(rates::eval_rate_deriv({Family::algebraic, Role::accuracy, 1.0, 0.5}, 7.0, 2) > 0.0);
  CHECK(rates::eval_rate_deriv({Family::exponential, Role::accuracy, 1.0, 0.5}, 7.0, 2) > 0.0);
  CHECK(rates::eval_rate_deriv({Family::algebraic, Role::cost, 1.0, 1.5}, 7.0, 2) > 0.0);
  CHECK(rates::eval_rate_deriv({Family::algebraic, Role::cost, 1.0, 0.5}, 7.0, 2) < 0.0);
  CHECK(rates::eval_rate_deriv({Family::exponential, Role::cost, 1.0, 0.5}, 7.0, 2) > 0.0);
}

TEST_CASE("validate_rate") {
  CHECK(!rates::validate_rate({Family::algebraic, Role::accuracy, 1.0, 0.5}));
  const auto bad = rates::validate_rate({Family::algebraic, Role::cost, -1.0, 1.0});
  REQUIRE(bad.has_value());
  CHECK(*bad == "scale must be positive");
  CHECK(!rates::validate_rate({Family::exponential, Role::cost, 1.0, 0.05}));
}

TEST_CASE("fit_rate recovers exact algebraic data") {
  const RateModel truth{Family::algebraic, Role::cost, 2.0, 1.5};
  const auto fit = rates::fit_rate(series_from_model(truth, {10, 20, 40, 80}),
                                   FitFamily::algebraic);
  CHECK(fit.model.scale == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(fit.model.exponent == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(fit.report.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_rate noiseless round trip is exact to 1e-8 over random models") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> exp_dist(0.1, 2.0);
  std::uniform_real_distribution<double> scale_dist(1e-5, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    RateModel truth;
    truth.family = trial % 2 ? Family::algebraic : Family::exponential;
    truth.role = (trial / 2) % 2 ? Role::accuracy : Role::cost;
    truth.scale = scale_dist(gen);
    truth.exponent = exp_dist(gen);
    const std::vector<double> ns = {2, 5, 9, 14, 20, 27};
    const auto fit = rates::fit_rate(
        series_from_model(truth, ns),
        truth.family == Family::algebraic ? FitFamily::algebraic
                                          : FitFamily::exponential);
    CHECK(fit.model.scale == doctest::Approx(truth.scale).epsilon(1e-8));
    CHECK(fit.model.exponent == doctest::Approx(truth.exponent).epsilon(1e-8));
  }
}

TEST_CASE("fit_rate tolerates 1% multiplicative noise") {
  // epsilon-SVR accuracy constants; 100 noise realizations must each land
  // within +/-0.05 of the true exponent.
  const RateModel truth{Family::algebraic, Role::accuracy, 0.7309, 0.4053};
  const std::vector<double> ns = {10, 20, 40, 80, 160, 320};
  std::mt19937_64 gen(31);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    rates::PilotSeries s = series_from_model(truth, ns);
    for (auto& p : s.points) p.value *= 1.0 + 0.01 * noise(gen);
    const auto fit = rates::fit_rate(s, FitFamily::algebraic);
    CHECK(std::abs(fit.model.exponent - 0.4053) < 0.05);
  }
}

TEST_CASE("fit_rate auto picks the better family") {
  const RateModel truth{Family::exponential, Role::accuracy, 1.0, 0.5};
  std::vector<double> ns;
  for (int n = 2; n <= 20; ++n) ns.push_back(n);
  const auto fit = rates::fit_rate(series_from_model(truth, ns), FitFamily::automatic);
  CHECK(fit.report.family == Family::exponential);
  CHECK(fit.model.exponent == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("fit_rate error paths") {
  rates::PilotSeries two;
  two.points = {{1, 1.0}, {2, 0.5}};
  CHECK_THROWS_AS(rates::fit_rate(two, FitFamily::automatic), FitError);

  rates::PilotSeries negative;
  negative.points = {{1, 1.0}, {2, -0.5}, {3, 0.2}};
  CHECK_THROWS_AS(rates::fit_rate(negative, FitFamily::automatic), FitError);

  rates::PilotSeries unsorted;
  unsorted.points = {{2, 1.0}, {1, 0.5}, {3, 0.2}};
  CHECK_THROWS_AS(rates::fit_rate(unsorted, FitFamily::automatic), FitError);

  // Increasing "accuracy" data contradicts the decreasing rate.
  rates::PilotSeries rising;
  rising.kind = rates::ValueKind::accuracy_gap;
  rising.points = {{1, 0.1}, {2, 0.2}, {4, 0.4}};
  CHECK_THROWS_AS(rates::fit_rate(rising, FitFamily::algebraic), FitError);
}

TEST_CASE("fit_rate clamps exact-zero accuracy gaps with a warning count") {
  rates::PilotSeries s;
  s.kind = rates::ValueKind::accuracy_gap;
  s.points = {{1, 0.5}, {2, 0.25}, {4, 0.125}, {8, 0.0}};
  const auto fit = rates::fit_rate(s, FitFamily::algebraic);
  CHECK(fit.report.clamped_zeros == 1);
  CHECK(fit.model.exponent > 0.0);
}
