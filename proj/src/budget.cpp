#include "camfmc/budget.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "camfmc/allocate.hpp"
#include "camfmc/errors.hpp"

namespace camfmc::budget {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void validate_spec(const TrainableSpec& spec) {
  if (spec.accuracy.role != rates::Role::accuracy)
    throw Error("trainable '" + spec.label + "': accuracy rate has wrong role");
  if (spec.cost.role != rates::Role::cost)
    throw Error("trainable '" + spec.label + "': cost rate has wrong role");
  if (auto v = rates::validate_rate(spec.accuracy))
    throw Error("trainable '" + spec.label + "' accuracy rate: " + *v);
  if (auto v = rates::validate_rate(spec.cost))
    throw Error("trainable '" + spec.label + "' cost rate: " + *v);
  if (spec.min_train < 1)
    throw Error("trainable '" + spec.label + "': min_train must be >= 1");
  if (!std::is_sorted(spec.feasible_sizes.begin(), spec.feasible_sizes.end()))
    throw Error("trainable '" + spec.label + "': feasible_sizes must be sorted");
}

// Second derivative of h(n) = kappa + prev_cost*c_a*r_a(n) + c_c*r_c(n).
double h_second(const ObjectiveContext& ctx, double n) {
  return ctx.prev_cost * rates::eval_rate_deriv(ctx.spec.accuracy, n, 2) +
         rates::eval_rate_deriv(ctx.spec.cost, n, 2);
}

double h_first(const ObjectiveContext& ctx, double n) {
  return ctx.prev_cost * rates::eval_rate_deriv(ctx.spec.accuracy, n, 1) +
         rates::eval_rate_deriv(ctx.spec.cost, n, 1);
}

double h_value(const ObjectiveContext& ctx, double n) {
  return ctx.kappa + ctx.prev_cost * rates::eval_rate(ctx.spec.accuracy, n) +
         rates::eval_rate(ctx.spec.cost, n);
}

// Numerator of u'(n); u' and it share their sign since (p-n)^2 > 0.
double u_prime_numerator(const ObjectiveContext& ctx, double n) {
  return h_first(ctx, n) * (ctx.remaining_budget - n) + h_value(ctx, n);
}

struct GoldenResult {
  double xmin = 0.0;
  double fmin = 0.0;
};

// Golden-section search for a strictly unimodal f on [lo, hi]; stops once the
// bracket is narrower than `width`.
template <class F>
GoldenResult golden_min(F&& f, double lo, double hi, double width) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double invphi2 = 1.0 - invphi;
  double a = lo, b = hi;
  double h = b - a;
  if (h <= width) {
    const double m = 0.5 * (a + b);
    return {m, f(m)};
  }
  double c = a + invphi2 * h;
  double d = a + invphi * h;
  double fc = f(c);
  double fd = f(d);
  while (h > width) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      h = b - a;
      c = a + invphi2 * h;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      h = b - a;
      d = a + invphi * h;
      fd = f(d);
    }
  }
  return fc < fd ? GoldenResult{c, fc} : GoldenResult{d, fd};
}

}  // namespace

long long nearest_feasible(const TrainableSpec& spec, long long requested) {
  if (spec.feasible_sizes.empty()) return requested;
  const auto& t = spec.feasible_sizes;
  auto it = std::lower_bound(t.begin(), t.end(), requested);
  if (it == t.end()) return t.back();
  if (it == t.begin()) return t.front();
  const long long above = *it;
  const long long below = *(it - 1);
  // Ties go to the larger feasible size.
  return (requested - below) < (above - requested) ? below : above;
}

double objective(const ObjectiveContext& ctx, double n) {
  if (!(n >= 1.0) || !(n <= ctx.remaining_budget - 1.0))
    throw std::domain_error("objective: n = " + fmt(n) + " outside [1, " +
                            fmt(ctx.remaining_budget - 1.0) + "]");
  return h_value(ctx, n) / (ctx.remaining_budget - n);
}

ConvexityCheck check_convexity(const ObjectiveContext& ctx, double lo, double hi) {
  if (!(lo >= 1.0) || !(hi >= lo))
    throw std::domain_error("check_convexity: need 1 <= lo <= hi");
  validate_spec(ctx.spec);
  ConvexityCheck out;

  const auto& cost = ctx.spec.cost;
  const bool cost_concave =
      cost.family == rates::Family::algebraic && cost.exponent < 1.0;
  if (!cost_concave) {
    // Both second derivatives are nonnegative and the accuracy one is
    // strictly positive everywhere.
    out.ok = true;
    out.certificate = "analytic: accuracy rate strictly convex, cost rate convex";
    return out;
  }

  if (ctx.spec.accuracy.family == rates::Family::algebraic) {
    // A n^{-a-2} + B n^{b-2} with A > 0 > B: positive exactly for n below
    // n_c = (A/|B|)^{1/(a+b)}, so the hi endpoint decides the interval.
    const double a = ctx.spec.accuracy.exponent;
    const double b = cost.exponent;
    const double A = ctx.prev_cost * ctx.spec.accuracy.scale * a * (a + 1.0);
    const double Babs = cost.scale * b * (1.0 - b);
    const double n_c = std::pow(A / Babs, 1.0 / (a + b));
    if (hi < n_c) {
      out.ok = true;
      out.certificate = "analytic endpoint check: sign change at n = " + fmt(n_c) +
                        " lies beyond hi = " + fmt(hi);
    } else {
      out.first_violation = std::max(lo, n_c);
      out.certificate = "analytic endpoint check: second derivative loses "
                        "positivity at n = " + fmt(*out.first_violation);
    }
    return out;
  }

  // Exponential accuracy against a concave algebraic cost: the sign is not
  // monotone, scan a geometric grid and report the first violation.
  constexpr int kGrid = 10000;
  const double ratio = hi / lo;
  for (int i = 0; i < kGrid; ++i) {
    const double n =
        lo * std::pow(ratio, static_cast<double>(i) / (kGrid - 1));
    if (!(h_second(ctx, n) > 0.0)) {
      out.first_violation = n;
      out.certificate = "geometric grid scan (10000 points): violation at n = " + fmt(n);
      return out;
    }
  }
  out.ok = true;
  out.certificate = "geometric grid scan (10000 points): positive throughout";
  return out;
}

MinimizeResult minimize_objective(const ObjectiveContext& ctx) {
  validate_spec(ctx.spec);
  if (!(ctx.remaining_budget > 2.0))
    throw BudgetError("remaining budget " + fmt(ctx.remaining_budget) +
                      " leaves no room for training plus sampling");
  const auto lo = std::max<long long>(1, ctx.spec.min_train);
  const auto hi =
      static_cast<long long>(std::floor(ctx.remaining_budget)) - 1;
  if (hi < lo)
    throw BudgetError("infeasible training interval [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "] for '" + ctx.spec.label + "'");

  MinimizeResult res;
  auto u = [&](double n) { return objective(ctx, n); };

  res.convexity = check_convexity(ctx, static_cast<double>(lo), static_cast<double>(hi));
  std::vector<long long> candidates;
  if (res.convexity.ok) {
    const auto g = golden_min(u, static_cast<double>(lo), static_cast<double>(hi), 0.5);
    res.continuous_minimizer = g.xmin;
    candidates = {lo, hi};
    const auto center = static_cast<long long>(std::llround(g.xmin));
    for (long long n = center - 2; n <= center + 2; ++n)
      if (n >= lo && n <= hi) candidates.push_back(n);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());
  } else {
    res.exhaustive_fallback = true;
    candidates.resize(static_cast<std::size_t>(hi - lo + 1));
    std::iota(candidates.begin(), candidates.end(), lo);
  }

  long long best = candidates.front();
  double best_val = u(static_cast<double>(best));
  for (const long long n : candidates) {
    const double v = u(static_cast<double>(n));
    if (v < best_val) {  // ties keep the smaller n
      best = n;
      best_val = v;
    }
  }
  res.n_star = best;
  res.objective_at_star = best_val;
  if (res.exhaustive_fallback) res.continuous_minimizer = static_cast<double>(best);

  // Which case of the uniqueness argument applied: u' > 0 throughout means a
  // left-boundary minimum, u' < 0 throughout a right-boundary one.
  if (u_prime_numerator(ctx, static_cast<double>(lo)) >= 0.0)
    res.boundary_case = "left-boundary";
  else if (u_prime_numerator(ctx, static_cast<double>(hi)) <= 0.0)
    res.boundary_case = "right-boundary";
  else
    res.boundary_case = "interior";
  return res;
}

SaturationBound saturation_bound(const TrainableSpec& spec, double prev_cost) {
  validate_spec(spec);
  ObjectiveContext ctx{0.0, prev_cost, 0.0, spec};
  auto phi = [&](double n) { return h_first(ctx, n); };

  double a = 1.0, b = 2.0;
  double fa = phi(a), fb = phi(b);
  // Expand the bracket until phi changes sign.
  while (fa > 0.0 && a > 1e-12) {
    b = a;
    fb = fa;
    a *= 0.5;
    fa = phi(a);
  }
  while (fb < 0.0 && b < 1e18) {
    a = b;
    fa = fb;
    b *= 2.0;
    fb = phi(b);
  }
  if (fa > 0.0) return {std::nullopt, SaturationRegime::always_increasing};
  if (fb < 0.0) return {std::nullopt, SaturationRegime::always_decreasing};

  if (fa == 0.0) return {a, SaturationRegime::root};
  if (fb == 0.0) return {b, SaturationRegime::root};
  for (int i = 0; i < 200 && (b - a) > 1e-10 * std::max(1.0, b); ++i) {
    const double m = 0.5 * (a + b);
    const double fm = phi(m);
    if (fm == 0.0) return {m, SaturationRegime::root};
    if (fm < 0.0)
      a = m;
    else
      b = m;
  }
  return {0.5 * (a + b), SaturationRegime::root};
}

TrainingPlan build_hierarchy(const LabeledStats& high_fi,
                             std::span<const LabeledStats> statics,
                             std::span<const TrainableSpec> trainables,
                             double budget) {
  if (!(budget > 2.0))
    throw BudgetError("budget must exceed 2 high-fidelity evaluations");
  if (std::abs(high_fi.stats.cost - 1.0) > 1e-12 ||
      std::abs(high_fi.stats.correlation - 1.0) > 1e-12)
    throw Error("high-fidelity stats must have cost 1 and correlation 1");

  TrainingPlan plan;
  plan.budget = budget;
  const double sigma0 = high_fi.stats.stddev;

  std::vector<std::string> labels{high_fi.label};
  std::vector<stats::ModelStats> predicted{high_fi.stats};
  double kappa = 0.0;
  double prev_cost = 1.0;
  for (const auto& s : statics) {
    kappa += prev_cost * (1.0 - s.stats.correlation * s.stats.correlation);
    prev_cost = s.stats.cost;
    labels.push_back(s.label);
    predicted.push_back(s.stats);
  }

  double p_rem = budget;
  for (const auto& t : trainables) {
    if (!(p_rem > 2.0)) {
      plan.warnings.push_back("budget exhausted before training '" + t.label + "'");
      break;
    }
    ObjectiveContext ctx{kappa, prev_cost, p_rem, t};
    const MinimizeResult res = minimize_objective(ctx);
    if (res.exhaustive_fallback)
      plan.warnings.push_back("convexity unverified for '" + t.label +
                              "'; exhaustive search used, uniqueness not guaranteed");

    long long n_feas = nearest_feasible(t, res.n_star);
    const auto hi = static_cast<long long>(std::floor(p_rem)) - 1;
    if (n_feas > hi) {
      // Granularity rounded past the budget; fall back to the largest
      // feasible size that still fits.
      const auto& tab = t.feasible_sizes;
      auto it = std::upper_bound(tab.begin(), tab.end(), hi);
      if (it == tab.begin()) {
        plan.warnings.push_back("no feasible training size within budget for '" +
                                t.label + "'; model skipped");
        continue;
      }
      n_feas = *(it - 1);
    }

    const double q = rates::eval_rate(t.accuracy, static_cast<double>(n_feas));
    const double w = rates::eval_rate(t.cost, static_cast<double>(n_feas));
    if (q >= 1.0)
      plan.warnings.push_back("accuracy bound for '" + t.label +
                              "' is uninformative at n = " + std::to_string(n_feas));
    const SaturationBound sat = saturation_bound(t, prev_cost);

    kappa += prev_cost * q;
    p_rem -= static_cast<double>(n_feas);

    TrainingStep step;
    step.label = t.label;
    step.n_star = res.n_star;
    step.n_feasible = n_feas;
    step.kappa_after = kappa;
    step.budget_after = p_rem;
    step.continuous_minimizer = res.continuous_minimizer;
    step.n_bar = sat.n_bar;
    step.convexity_certificate = res.convexity.certificate;
    step.minimizer_case = res.boundary_case;
    step.exhaustive_fallback = res.exhaustive_fallback;
    plan.steps.push_back(std::move(step));

    const double rho = std::sqrt(std::max(0.0, 1.0 - q));
    stats::ModelStats pred;
    pred.cost = w;
    pred.correlation = rho;
    pred.stddev = rho > 0.0 ? sigma0 / rho : sigma0;
    predicted.push_back(pred);
    labels.push_back(t.label);
    prev_cost = w;
  }
  plan.residual_budget = p_rem;

  const auto violations = allocate::check_ordering(predicted);
  if (violations.empty()) {
    plan.hierarchy = std::move(labels);
    plan.predicted = std::move(predicted);
  } else {
    const auto rr = allocate::reorder_models({predicted, labels});
    plan.reordered = true;
    plan.warnings.push_back("predicted stats violate the ordering (" +
                            violations.front().what + "); hierarchy reordered");
    for (const auto& d : rr.dropped)
      plan.warnings.push_back("model '" + d + "' dropped by the ordering repair");
    plan.dropped = rr.dropped;
    plan.hierarchy = rr.hierarchy.labels;
    plan.predicted = rr.hierarchy.stats;
  }
  return plan;
}

}  // namespace camfmc::budget
