#include "camfmc/rates.hpp"

#include <cmath>
#include <stdexcept>

#include "camfmc/errors.hpp"

namespace camfmc::rates {

namespace {

void require_positive_n(double n) {
  if (!(n > 0.0))
    throw std::domain_error("rate evaluated at non-positive n = " + std::to_string(n));
}

// Signed exponent: accuracy rates decay, cost rates grow.
double signed_exponent(const RateModel& m) {
  return m.role == Role::accuracy ? -m.exponent : m.exponent;
}

}  // namespace

double eval_rate(const RateModel& model, double n) {
  require_positive_n(n);
  const double s = signed_exponent(model);
  if (model.family == Family::algebraic) return model.scale * std::pow(n, s);
  return model.scale * std::exp(s * n);
}

double eval_rate_deriv(const RateModel& model, double n, int order) {
  require_positive_n(n);
  if (order != 1 && order != 2)
    throw std::domain_error("derivative order must be 1 or 2");
  const double s = signed_exponent(model);
  if (model.family == Family::algebraic) {
    if (order == 1) return model.scale * s * std::pow(n, s - 1.0);
    return model.scale * s * (s - 1.0) * std::pow(n, s - 2.0);
  }
  const double v = model.scale * std::exp(s * n);
  return order == 1 ? s * v : s * s * v;
}

std::optional<std::string> validate_rate(const RateModel& model) {
  if (!(model.scale > 0.0)) return "scale must be positive";
  if (!(model.exponent > 0.0)) return "exponent must be positive";
  if (!std::isfinite(model.scale) || !std::isfinite(model.exponent))
    return "parameters must be finite";
  return std::nullopt;
}

namespace {

struct TransformedFit {
  bool valid = false;
  std::string why;
  RateModel model;
  FitReport report;
};

// Ordinary least squares of y on x; returns slope/intercept.
void ols(const std::vector<double>& x, const std::vector<double>& y,
         double& slope, double& intercept, double& r_squared,
         double& residual_norm) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw FitError("degenerate abscissae in rate regression");
  slope = sxy / sxx;
  intercept = my - slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    ss_res += r * r;
  }
  residual_norm = std::sqrt(ss_res);
  // Constant data fitted exactly has R^2 = 1 by convention.
  r_squared = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
}

TransformedFit fit_family(const PilotSeries& series, Family family,
                          std::size_t clamped) {
  const Role role =
      series.kind == ValueKind::accuracy_gap ? Role::accuracy : Role::cost;
  std::vector<double> x, y;
  x.reserve(series.points.size());
  y.reserve(series.points.size());
  for (const auto& p : series.points) {
    const double v = p.value > 0.0 ? p.value : 1e-16;
    x.push_back(family == Family::algebraic ? std::log(p.n) : p.n);
    y.push_back(std::log(v));
  }
  TransformedFit out;
  double slope = 0.0, intercept = 0.0;
  ols(x, y, slope, intercept, out.report.r_squared, out.report.residual_norm);
  const double exponent = role == Role::accuracy ? -slope : slope;
  if (!(exponent > 0.0)) {
    out.why = "fitted trend contradicts the " +
              std::string(role == Role::accuracy ? "decreasing accuracy"
                                                 : "increasing cost") +
              " rate";
    return out;
  }
  out.valid = true;
  out.model = RateModel{family, role, std::exp(intercept), exponent};
  out.report.family = family;
  out.report.points = series.points.size();
  out.report.clamped_zeros = clamped;
  return out;
}

}  // namespace

FitResult fit_rate(const PilotSeries& series, FitFamily family) {
  if (series.points.size() < 3)
    throw FitError("pilot series needs at least 3 points, got " +
                   std::to_string(series.points.size()));
  std::size_t clamped = 0;
  double prev_n = 0.0;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    if (!(p.n > 0.0))
      throw FitError("pilot point " + std::to_string(i + 1) + " has non-positive n");
    if (!(p.n > prev_n))
      throw FitError("pilot n values must be strictly increasing (point " +
                     std::to_string(i + 1) + ")");
    prev_n = p.n;
    if (p.value < 0.0 || !std::isfinite(p.value))
      throw FitError("pilot point " + std::to_string(i + 1) + " has invalid value");
    if (p.value == 0.0) {
      // A perfectly correlated pilot run; clamp so the log transform stays
      // defined and record it in the report.
      if (series.kind == ValueKind::cost)
        throw FitError("pilot point " + std::to_string(i + 1) + " has zero cost");
      ++clamped;
    }
  }

  if (family == FitFamily::algebraic || family == FitFamily::exponential) {
    const Family f = family == FitFamily::algebraic ? Family::algebraic
                                                    : Family::exponential;
    TransformedFit fit = fit_family(series, f, clamped);
    if (!fit.valid) throw FitError(fit.why);
    return {fit.model, fit.report};
  }

  TransformedFit alg = fit_family(series, Family::algebraic, clamped);
  TransformedFit exp = fit_family(series, Family::exponential, clamped);
  if (!alg.valid && !exp.valid)
    throw FitError("no admissible rate family: " + alg.why);
  if (alg.valid && exp.valid) {
    // Ties go to the algebraic family.
    const TransformedFit& best =
        exp.report.r_squared > alg.report.r_squared ? exp : alg;
    return {best.model, best.report};
  }
  const TransformedFit& only = alg.valid ? alg : exp;
  return {only.model, only.report};
}

}  // namespace camfmc::rates
