#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "camfmc/budget.hpp"
#include "camfmc/stats.hpp"

namespace camfmc::allocate {

// Ordered model hierarchy, model 0 the high-fidelity one (cost 1, rho 1).
struct Hierarchy {
  std::vector<stats::ModelStats> stats;
  std::vector<std::string> labels;
};

struct OrderingViolation {
  std::size_t index = 0;  // low-fidelity index j = 1..k of the failed condition
  std::string what;
};

// Checks 1 = |rho_0| > |rho_1| > ... > |rho_k| and, for j = 1..k,
// w_{j-1}/w_j > (rho_{j-1}^2 - rho_j^2) / (rho_j^2 - rho_{j+1}^2) with
// rho_{k+1} = 0. Violations are data, not errors.
std::vector<OrderingViolation> check_ordering(std::span<const stats::ModelStats> models);

struct ReorderResult {
  Hierarchy hierarchy;
  std::vector<std::string> dropped;  // labels removed to restore the ordering
  bool changed = false;
};

// Sorts low-fidelity models by decreasing |rho|, then greedily drops models
// that break the ordering until check_ordering passes. A hierarchy of just
// the high-fidelity model is a valid outcome.
ReorderResult reorder_models(const Hierarchy& input);

struct Allocation {
  std::vector<long long> counts;     // integerized m_0 <= ... <= m_k
  std::vector<double> real_counts;   // closed-form counts before rounding
  std::vector<double> coefficients;  // alpha_1..alpha_k
  double analytic_mse = 0.0;         // from the real-valued counts
  double budget = 0.0;
  double realized_cost = 0.0;        // sum m_j w_j <= budget
};

// Closed-form optimal sample allocation for a given budget:
//   alpha_j = rho_j sigma_0 / sigma_j,
//   m_j = m_0 sqrt(w_0 (rho_j^2 - rho_{j+1}^2) / (w_j (1 - rho_1^2))),
//   m_0 = budget / sum_j w_j r_j.
// Integerization floors every count, enforces monotonicity, and spends any
// leftover budget on the cheapest model. Throws BudgetError when the budget
// cannot afford m_0 >= 1 and DegenerateError when rho_1 = 1 exactly.
Allocation optimal_allocation(const Hierarchy& hierarchy, double budget);

// sigma0^2/(budget - training_spent) * (sum_j sqrt(w_j (rho_j^2 - rho_{j+1}^2)))^2.
// With training_spent = 0 this is the MFMC MSE; k = 0 reduces to sigma0^2/p.
double analytic_mse(const Hierarchy& hierarchy, double budget,
                    double training_spent = 0.0);

// ---- analytic-MSE model-subset selection ----

struct Candidate {
  std::string label;
  std::variant<stats::ModelStats, budget::TrainableSpec> model;
};

struct SubsetResult {
  std::vector<std::string> members;  // low-fidelity labels, hierarchy order
  bool admissible = false;
  std::string exclusion_reason;
  std::vector<double> mse_per_budget;  // aligned with the budget grid
  double mse_at_max_budget = 0.0;
};

struct SelectionTable {
  std::vector<double> budgets;
  std::vector<SubsetResult> subsets;  // admissible first, ranked by MSE at
                                      // the largest budget, ascending
};

// Evaluates every nonempty candidate subset: statics enter with their
// measured stats (sorted by decreasing |rho|), trainables through the
// sequential training plan at each budget, and the subset's value is the
// analytic CA-MFMC MSE with the rate-predicted stats. Subsets whose ordering
// cannot hold without dropping a member are excluded with a reason.
SelectionTable select_models(const stats::ModelStats& high_fi,
                             std::span<const Candidate> candidates,
                             std::span<const double> budgets);

}  // namespace camfmc::allocate
