#pragma once

#include <optional>
#include <string>
#include <vector>

namespace camfmc::rates {

enum class Family { algebraic, exponential };
enum class Role { accuracy, cost };

// Parametric bound c*r(n) on an accuracy gap 1-rho^2(n) (decreasing) or an
// evaluation cost w(n) (increasing), defined on real n > 0 so that
// derivative-based optimization is well-posed. Integer restriction is the
// budget optimizer's business.
//
//   accuracy: c*n^-a (algebraic) or c*e^(-a*n) (exponential)
//   cost:     c*n^b  (algebraic) or c*e^(b*n)  (exponential)
struct RateModel {
  Family family = Family::algebraic;
  Role role = Role::accuracy;
  double scale = 1.0;     // c
  double exponent = 1.0;  // a or b
};

// Value of the rate at n > 0. Throws std::domain_error for n <= 0.
double eval_rate(const RateModel& model, double n);

// Exact analytic first or second derivative (order 1 or 2).
double eval_rate_deriv(const RateModel& model, double n, int order);

// nullopt when the model satisfies its invariants, else a description of the
// first violation (positivity of parameters, monotonicity direction).
std::optional<std::string> validate_rate(const RateModel& model);

enum class ValueKind { accuracy_gap, cost };

struct PilotPoint {
  double n = 0.0;      // training-set size of the pilot run
  double value = 0.0;  // measured 1-rho^2(n) or w(n)
};

struct PilotSeries {
  std::vector<PilotPoint> points;  // n strictly increasing, >= 3 points
  ValueKind kind = ValueKind::accuracy_gap;
};

enum class FitFamily { algebraic, exponential, automatic };

struct FitReport {
  Family family = Family::algebraic;
  double r_squared = 0.0;       // coefficient of determination, log space
  double residual_norm = 0.0;   // 2-norm of log-space residuals
  std::size_t points = 0;
  std::size_t clamped_zeros = 0;  // exact-zero accuracy gaps clamped to 1e-16
};

struct FitResult {
  RateModel model;
  FitReport report;
};

// Least squares in transformed coordinates: log(value) on log(n) for the
// algebraic family, log(value) on n for the exponential one. `automatic`
// fits both and keeps the higher coefficient of determination, ties broken
// toward algebraic. Throws FitError for an invalid series or when no family
// yields a rate with the right monotonicity.
FitResult fit_rate(const PilotSeries& series, FitFamily family);

}  // namespace camfmc::rates
