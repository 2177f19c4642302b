#include "camfmc/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "camfmc/errors.hpp"

namespace camfmc::allocate {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void require_high_fidelity_front(std::span<const stats::ModelStats> models) {
  if (models.empty()) throw Error("hierarchy must contain the high-fidelity model");
  const auto& hi = models[0];
  if (std::abs(hi.cost - 1.0) > 1e-12 || std::abs(hi.correlation - 1.0) > 1e-12)
    throw Error("model 0 must be the high-fidelity model (cost 1, correlation 1)");
}

}  // namespace

std::vector<OrderingViolation> check_ordering(
    std::span<const stats::ModelStats> models) {
  require_high_fidelity_front(models);
  std::vector<OrderingViolation> out;
  const std::size_t k = models.size() - 1;

  auto rho2 = [&](std::size_t j) {
    if (j > k) return 0.0;  // rho_{k+1} = 0 convention
    const double r = models[j].correlation;
    return r * r;
  };

  // Strict correlation ordering first; the cost-ratio conditions are not
  // meaningful until it holds.
  for (std::size_t j = 1; j <= k; ++j) {
    const double prev = std::abs(models[j - 1].correlation);
    const double cur = std::abs(models[j].correlation);
    if (!(cur < prev))
      out.push_back({j, "non-strict correlation ordering at j=" + std::to_string(j)});
  }
  if (!out.empty()) return out;

  for (std::size_t j = 1; j <= k; ++j) {
    const double gap = rho2(j) - rho2(j + 1);
    if (!(gap > 0.0)) {  // only possible at j = k with rho_k = 0
      out.push_back({j, "zero correlation gap at j=" + std::to_string(j) +
                            " (rho_j^2 - rho_{j+1}^2 <= 0)"});
      continue;
    }
    const double lhs = models[j - 1].cost / models[j].cost;
    const double rhs = (rho2(j - 1) - rho2(j)) / gap;
    if (!(lhs > rhs)) {
      out.push_back({j, "cost-ratio condition violated at j=" + std::to_string(j) +
                            ": w_{j-1}/w_j = " + fmt(lhs) + " <= " + fmt(rhs)});
    }
  }
  return out;
}

ReorderResult reorder_models(const Hierarchy& input) {
  require_high_fidelity_front(input.stats);
  if (input.labels.size() != input.stats.size())
    throw Error("reorder_models: one label per model required");

  struct Entry {
    stats::ModelStats stats;
    std::string label;
  };
  std::vector<Entry> lowfi;
  for (std::size_t j = 1; j < input.stats.size(); ++j)
    lowfi.push_back({input.stats[j], input.labels[j]});
  std::stable_sort(lowfi.begin(), lowfi.end(), [](const Entry& a, const Entry& b) {
    return std::abs(a.stats.correlation) > std::abs(b.stats.correlation);
  });

  ReorderResult result;
  auto assemble = [&](const std::vector<Entry>& entries) {
    Hierarchy h;
    h.stats.push_back(input.stats[0]);
    h.labels.push_back(input.labels[0]);
    for (const auto& e : entries) {
      h.stats.push_back(e.stats);
      h.labels.push_back(e.label);
    }
    return h;
  };

  // Greedily drop the model blamed by the first remaining violation.
  std::vector<Entry> kept = lowfi;
  Hierarchy current = assemble(kept);
  while (true) {
    const auto violations = check_ordering(current.stats);
    if (violations.empty()) break;
    const std::size_t j = violations.front().index;  // 1-based low-fi index
    result.dropped.push_back(kept[j - 1].label);
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(j - 1));
    current = assemble(kept);
  }
  result.changed =
      !result.dropped.empty() || current.labels != input.labels;
  result.hierarchy = std::move(current);
  return result;
}

namespace {

double rho2_at(const Hierarchy& h, std::size_t j) {
  if (j >= h.stats.size()) return 0.0;
  const double r = h.stats[j].correlation;
  return r * r;
}

}  // namespace

double analytic_mse(const Hierarchy& hierarchy, double budget,
                    double training_spent) {
  require_high_fidelity_front(hierarchy.stats);
  if (!(budget > training_spent))
    throw BudgetError("budget " + fmt(budget) + " does not exceed training cost " +
                      fmt(training_spent));
  const auto violations = check_ordering(hierarchy.stats);
  if (!violations.empty())
    throw Error("analytic_mse requires the model ordering: " + violations.front().what);
  const double sigma0 = hierarchy.stats[0].stddev;
  double coeff = 0.0;
  for (std::size_t j = 0; j < hierarchy.stats.size(); ++j)
    coeff += std::sqrt(hierarchy.stats[j].cost * (rho2_at(hierarchy, j) - rho2_at(hierarchy, j + 1)));
  return sigma0 * sigma0 / (budget - training_spent) * coeff * coeff;
}

Allocation optimal_allocation(const Hierarchy& hierarchy, double budget) {
  require_high_fidelity_front(hierarchy.stats);
  const auto violations = check_ordering(hierarchy.stats);
  if (!violations.empty())
    throw Error("optimal_allocation requires the model ordering: " +
                violations.front().what);
  const std::size_t k = hierarchy.stats.size() - 1;
  if (k >= 1 && rho2_at(hierarchy, 1) >= 1.0)
    throw DegenerateError("rho_1 = 1: zero-variance control variate");

  const double one_minus_rho1sq = k >= 1 ? 1.0 - rho2_at(hierarchy, 1) : 1.0;
  std::vector<double> ratio(k + 1);
  double cost_per_m0 = 0.0;
  for (std::size_t j = 0; j <= k; ++j) {
    const double gap = rho2_at(hierarchy, j) - rho2_at(hierarchy, j + 1);
    ratio[j] = std::sqrt(gap / (hierarchy.stats[j].cost * one_minus_rho1sq));
    cost_per_m0 += hierarchy.stats[j].cost * ratio[j];
  }

  Allocation alloc;
  alloc.budget = budget;
  const double m0 = budget / cost_per_m0;
  if (m0 < 1.0)
    throw BudgetError("budget " + fmt(budget) + " is infeasible: closed-form m_0 = " +
                      fmt(m0) + " < 1 (needs at least " + fmt(cost_per_m0) + ")");

  alloc.real_counts.resize(k + 1);
  alloc.counts.resize(k + 1);
  for (std::size_t j = 0; j <= k; ++j) alloc.real_counts[j] = m0 * ratio[j];
  alloc.counts[0] = static_cast<long long>(std::floor(alloc.real_counts[0]));
  for (std::size_t j = 1; j <= k; ++j) {
    alloc.counts[j] = std::max(static_cast<long long>(std::floor(alloc.real_counts[j])),
                               alloc.counts[j - 1]);
  }

  auto realized = [&]() {
    double c = 0.0;
    for (std::size_t j = 0; j <= k; ++j)
      c += static_cast<double>(alloc.counts[j]) * hierarchy.stats[j].cost;
    return c;
  };
  // Spend the integerization leftover on the cheapest (last) model.
  const double wk = hierarchy.stats[k].cost;
  double spent = realized();
  if (spent + wk <= budget) {
    const auto extra = static_cast<long long>(std::floor((budget - spent) / wk));
    alloc.counts[k] += extra;
    spent = realized();
    while (spent + wk <= budget) {  // floating-point stragglers
      ++alloc.counts[k];
      spent += wk;
    }
    while (spent > budget && alloc.counts[k] > alloc.counts[k > 0 ? k - 1 : 0]) {
      --alloc.counts[k];
      spent -= wk;
    }
  }
  alloc.realized_cost = realized();

  const double sigma0 = hierarchy.stats[0].stddev;
  alloc.coefficients.resize(k);
  for (std::size_t j = 1; j <= k; ++j) {
    const auto& s = hierarchy.stats[j];
    if (!(s.stddev > 0.0))
      throw DegenerateError("model " + std::to_string(j) + " has zero variance");
    alloc.coefficients[j - 1] = s.correlation * sigma0 / s.stddev;
  }
  alloc.analytic_mse = analytic_mse(hierarchy, budget, 0.0);
  return alloc;
}

// ---- model-subset selection ----

namespace {

struct SubsetEval {
  SubsetResult result;
  bool ok = false;
};

SubsetEval evaluate_subset(const stats::ModelStats& high_fi,
                           const std::vector<budget::LabeledStats>& statics,
                           const std::vector<budget::TrainableSpec>& trainables,
                           std::span<const double> budgets, double max_budget) {
  SubsetEval ev;
  auto& r = ev.result;
  const budget::LabeledStats hi{"f0", high_fi};

  if (trainables.empty()) {
    Hierarchy h;
    h.stats.push_back(high_fi);
    h.labels.push_back("f0");
    for (const auto& s : statics) {
      h.stats.push_back(s.stats);
      h.labels.push_back(s.label);
    }
    const auto violations = check_ordering(h.stats);
    if (!violations.empty()) {
      r.exclusion_reason = violations.front().what;
      return ev;
    }
    for (std::size_t i = 1; i < h.labels.size(); ++i)
      r.members.push_back(h.labels[i]);
    for (const double p : budgets)
      r.mse_per_budget.push_back(analytic_mse(h, p, 0.0));
    r.mse_at_max_budget = analytic_mse(h, max_budget, 0.0);
    r.admissible = true;
    ev.ok = true;
    return ev;
  }

  for (const double p : budgets) {
    const auto plan = budget::build_hierarchy(hi, statics, trainables, p);
    if (!plan.dropped.empty()) {
      r.exclusion_reason = "ordering cannot hold without dropping '" +
                           plan.dropped.front() + "'";
      return ev;
    }
    if (plan.steps.size() != trainables.size()) {
      r.exclusion_reason = "budget " + fmt(p) + " exhausted before training '" +
                           trainables[plan.steps.size()].label + "'";
      return ev;
    }
    Hierarchy h{plan.predicted, plan.hierarchy};
    const double training_spent = plan.budget - plan.residual_budget;
    r.mse_per_budget.push_back(analytic_mse(h, p, training_spent));
    if (p == max_budget) {
      r.mse_at_max_budget = r.mse_per_budget.back();
      r.members.assign(plan.hierarchy.begin() + 1, plan.hierarchy.end());
    }
  }
  r.admissible = true;
  ev.ok = true;
  return ev;
}

}  // namespace

SelectionTable select_models(const stats::ModelStats& high_fi,
                             std::span<const Candidate> candidates,
                             std::span<const double> budgets) {
  if (budgets.empty()) throw Error("select_models: budget grid is empty");
  for (const double p : budgets)
    if (!(p > 0.0)) throw Error("select_models: budgets must be positive");
  if (candidates.size() > 16)
    throw Error("select_models: too many candidates (max 16)");
  const double max_budget = *std::max_element(budgets.begin(), budgets.end());

  SelectionTable table;
  table.budgets.assign(budgets.begin(), budgets.end());

  const std::size_t c = candidates.size();
  const std::size_t subset_count = (std::size_t{1} << c);  // includes empty set
  std::vector<SubsetResult> results(subset_count);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long long maski = 0; maski < static_cast<long long>(subset_count); ++maski) {
    const auto mask = static_cast<std::size_t>(maski);
    if (mask == 0) {
      // The empty low-fidelity set: the plain MC curve as the baseline row.
      SubsetResult mc;
      mc.admissible = true;
      const double s2 = high_fi.stddev * high_fi.stddev;
      for (const double p : budgets) mc.mse_per_budget.push_back(s2 / p);
      mc.mse_at_max_budget = s2 / max_budget;
      results[mask] = std::move(mc);
      continue;
    }
    std::vector<budget::LabeledStats> statics;
    std::vector<budget::TrainableSpec> trainables;
    std::vector<std::string> requested;
    for (std::size_t i = 0; i < c; ++i) {
      if (!(mask & (std::size_t{1} << i))) continue;
      requested.push_back(candidates[i].label);
      if (const auto* s = std::get_if<stats::ModelStats>(&candidates[i].model))
        statics.push_back({candidates[i].label, *s});
      else
        trainables.push_back(std::get<budget::TrainableSpec>(candidates[i].model));
    }
    std::stable_sort(statics.begin(), statics.end(),
                     [](const budget::LabeledStats& a, const budget::LabeledStats& b) {
                       return std::abs(a.stats.correlation) >
                              std::abs(b.stats.correlation);
                     });
    SubsetEval ev;
    try {
      ev = evaluate_subset(high_fi, statics, trainables, budgets, max_budget);
    } catch (const std::exception& e) {
      ev.result.exclusion_reason = e.what();
    }
    if (ev.result.members.empty()) ev.result.members = requested;
    results[mask] = std::move(ev.result);
  }

  std::vector<std::size_t> order(subset_count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = results[a];
    const auto& rb = results[b];
    if (ra.admissible != rb.admissible) return ra.admissible;
    if (!ra.admissible) return a < b;
    return ra.mse_at_max_budget < rb.mse_at_max_budget;
  });
  for (const std::size_t idx : order) table.subsets.push_back(std::move(results[idx]));
  return table;
}

}  // namespace camfmc::allocate
