#include "camfmc/json_io.hpp"

#include "camfmc/errors.hpp"

namespace camfmc::rates {

using nlohmann::json;

namespace {

std::string family_name(Family f) {
  return f == Family::algebraic ? "algebraic" : "exponential";
}

std::string role_name(Role r) { return r == Role::accuracy ? "accuracy" : "cost"; }

}  // namespace

void to_json(json& j, const RateModel& m) {
  j = json{{"family", family_name(m.family)},
           {"role", role_name(m.role)},
           {"scale", m.scale},
           {"exponent", m.exponent}};
}

void from_json(const json& j, RateModel& m) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "algebraic")
    m.family = Family::algebraic;
  else if (family == "exponential")
    m.family = Family::exponential;
  else
    throw ConfigError("unknown rate family '" + family + "'");
  const std::string role = j.at("role").get<std::string>();
  if (role == "accuracy")
    m.role = Role::accuracy;
  else if (role == "cost")
    m.role = Role::cost;
  else
    throw ConfigError("unknown rate role '" + role + "'");
  m.scale = j.at("scale").get<double>();
  m.exponent = j.at("exponent").get<double>();
}

void to_json(json& j, const FitReport& r) {
  j = json{{"family", family_name(r.family)},
           {"r_squared", r.r_squared},
           {"residual_norm", r.residual_norm},
           {"points", r.points},
           {"clamped_zeros", r.clamped_zeros}};
}

}  // namespace camfmc::rates

namespace camfmc::stats {

using nlohmann::json;

void to_json(json& j, const ModelStats& s) {
  j = json{{"cost", s.cost}, {"correlation", s.correlation}, {"stddev", s.stddev}};
}

void from_json(const json& j, ModelStats& s) {
  s.cost = j.at("cost").get<double>();
  s.correlation = j.at("correlation").get<double>();
  s.stddev = j.at("stddev").get<double>();
}

}  // namespace camfmc::stats

namespace camfmc::allocate {

using nlohmann::json;

void to_json(json& j, const Allocation& a) {
  j = json{{"counts", a.counts},
           {"real_counts", a.real_counts},
           {"coefficients", a.coefficients},
           {"analytic_mse", a.analytic_mse},
           {"budget", a.budget},
           {"realized_cost", a.realized_cost}};
}

void to_json(json& j, const SelectionTable& t) {
  json subsets = json::array();
  for (const auto& s : t.subsets) {
    json e{{"members", s.members},
           {"admissible", s.admissible},
           {"mse_per_budget", s.mse_per_budget}};
    if (s.admissible)
      e["mse_at_max_budget"] = s.mse_at_max_budget;
    else
      e["exclusion_reason"] = s.exclusion_reason;
    subsets.push_back(std::move(e));
  }
  j = json{{"budgets", t.budgets}, {"subsets", std::move(subsets)}};
}

}  // namespace camfmc::allocate

namespace camfmc::budget {

using nlohmann::json;

void to_json(json& j, const TrainingStep& s) {
  j = json{{"label", s.label},
           {"n_star", s.n_star},
           {"n_feasible", s.n_feasible},
           {"kappa_after", s.kappa_after},
           {"budget_after", s.budget_after},
           {"diagnostics",
            json{{"continuous_minimizer", s.continuous_minimizer},
                 {"n_bar", s.n_bar ? json(*s.n_bar) : json(nullptr)},
                 {"convexity_certificate", s.convexity_certificate},
                 {"minimizer_case", s.minimizer_case},
                 {"exhaustive_fallback", s.exhaustive_fallback}}}};
}

void to_json(json& j, const TrainingPlan& p) {
  j = json{{"steps", p.steps},
           {"hierarchy", p.hierarchy},
           {"predicted_stats", p.predicted},
           {"budget", p.budget},
           {"residual_budget", p.residual_budget},
           {"warnings", p.warnings},
           {"reordered", p.reordered},
           {"dropped", p.dropped}};
}

}  // namespace camfmc::budget

namespace camfmc::engine {

using nlohmann::json;

void to_json(json& j, const BudgetLedger& l) {
  j = json{{"budget", l.budget},
           {"spent_training", l.spent_training},
           {"spent_sampling", l.spent_sampling},
           {"spent_pilot", l.spent_pilot},
           {"pilot_charged", l.charge_pilot},
           {"eval_counts", l.eval_counts}};
}

void to_json(json& j, const CaMfmcReport& r) {
  j = json{{"estimate", r.estimate},
           {"hierarchy", json{{"labels", r.hierarchy.labels},
                              {"stats", r.hierarchy.stats}}},
           {"allocation", r.allocation},
           {"predicted_stats", r.predicted},
           {"analytic_mse", r.analytic_mse},
           {"ledger", r.ledger},
           {"model_means", r.sampling.model_means},
           {"notes", r.notes},
           {"failed", r.failed}};
  if (r.failed) {
    j["error"] = r.error;
    if (r.failed_sample) j["failed_sample"] = *r.failed_sample;
  }
}

}  // namespace camfmc::engine
