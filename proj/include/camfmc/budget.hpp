#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camfmc/rates.hpp"
#include "camfmc/stats.hpp"

namespace camfmc::budget {

// A trainable low-fidelity model seen through its rate bounds: accuracy rate
// bounds 1-rho^2(n), cost rate bounds w(n), both as functions of the number n
// of high-fidelity training runs. `feasible_sizes`, when non-empty, restricts
// n to a discrete table (e.g. sparse-grid cardinalities); requested sizes are
// rounded to the nearest entry, ties toward the larger one.
struct TrainableSpec {
  std::string label;
  rates::RateModel accuracy;  // role accuracy
  rates::RateModel cost;      // role cost
  long long min_train = 1;
  std::vector<long long> feasible_sizes;  // sorted ascending when present
};

long long nearest_feasible(const TrainableSpec& spec, long long requested);

// State carried between sequential training steps. For the first trainable
// model kappa = 0, prev_cost = w0 = 1 and remaining_budget = p. All budgets
// are in units of one high-fidelity evaluation.
struct ObjectiveContext {
  double kappa = 0.0;
  double prev_cost = 1.0;
  double remaining_budget = 0.0;
  TrainableSpec spec;
};

// (kappa + prev_cost*c_a*r_a(n) + c_c*r_c(n)) / (remaining_budget - n)
// for n in [1, remaining_budget - 1].
double objective(const ObjectiveContext& ctx, double n);

struct ConvexityCheck {
  bool ok = false;
  std::optional<double> first_violation;  // smallest failing n in [lo, hi]
  std::string certificate;
};

// Verifies prev_cost*c_a*r_a''(n) + c_c*r_c''(n) > 0 on [lo, hi]. Analytic
// for family combinations with a monotone sign; otherwise a geometric grid
// scan of 10^4 points reporting the first sign violation.
ConvexityCheck check_convexity(const ObjectiveContext& ctx, double lo, double hi);

struct MinimizeResult {
  long long n_star = 1;
  double continuous_minimizer = 1.0;
  double objective_at_star = 0.0;
  std::string boundary_case;  // "left-boundary" | "interior" | "right-boundary"
  bool exhaustive_fallback = false;
  ConvexityCheck convexity;
};

// Integer argmin of the objective on [max(1, min_train), floor(p) - 1], ties
// toward smaller n. Under a passing convexity check the objective is strictly
// unimodal, so golden-section search brackets the continuous minimizer and the
// nearby integers are compared exactly; on a failing check the search falls
// back to exhaustive enumeration with a warning flag.
MinimizeResult minimize_objective(const ObjectiveContext& ctx);

enum class SaturationRegime {
  root,               // h'(n_bar) = 0 bracketed and bisected
  always_increasing,  // h' > 0 everywhere probed: training never pays, n* = 1
  always_decreasing,  // h' < 0 everywhere probed: no budget-free cap
};

struct SaturationBound {
  std::optional<double> n_bar;
  SaturationRegime regime = SaturationRegime::root;
};

// Budget-independent cap on the optimal training size: the root of
// prev_cost*c_a*r_a'(n) + c_c*r_c'(n) = 0, found by bisection on an
// expanding bracket; n* <= max(1, n_bar) whenever the root exists.
SaturationBound saturation_bound(const TrainableSpec& spec, double prev_cost);

struct TrainingStep {
  std::string label;
  long long n_star = 0;     // optimizer output
  long long n_feasible = 0; // after granularity rounding; this is what trains
  double kappa_after = 0.0;
  double budget_after = 0.0;
  double continuous_minimizer = 0.0;
  std::optional<double> n_bar;
  std::string convexity_certificate;
  std::string minimizer_case;
  bool exhaustive_fallback = false;
};

struct LabeledStats {
  std::string label;
  stats::ModelStats stats;
};

struct TrainingPlan {
  std::vector<TrainingStep> steps;
  // Final model order after the ordering validation, high-fidelity first,
  // with the stats used for it (measured for statics, rate bounds evaluated
  // at n_feasible for trained models, predicted sigma_j = sigma0/|rho_j|).
  std::vector<std::string> hierarchy;
  std::vector<stats::ModelStats> predicted;
  double budget = 0.0;           // total p, w0 = 1 units
  double residual_budget = 0.0;  // p - sum of n_feasible
  std::vector<std::string> warnings;
  bool reordered = false;
  std::vector<std::string> dropped;  // models removed by the ordering repair
};

// Sequential hierarchy construction: statics contribute their measured w and
// 1-rho^2 to the kappa ledger, then each trainable in order gets an
// ObjectiveContext, a convexity check and an integer minimizer; its training
// cost n_feasible * w0 is deducted from the budget. The final predicted stats
// are validated against the MFMC ordering and reordered/trimmed if needed.
TrainingPlan build_hierarchy(const LabeledStats& high_fi,
                             std::span<const LabeledStats> statics,
                             std::span<const TrainableSpec> trainables,
                             double budget);

}  // namespace camfmc::budget
