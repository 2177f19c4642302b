#include "camfmc/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "camfmc/config.hpp"
#include "camfmc/csv_io.hpp"
#include "camfmc/errors.hpp"
#include "camfmc/json_io.hpp"
#include "camfmc/rng.hpp"

namespace camfmc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

fs::path ensure_out_dir(const std::string& dir) {
  fs::path p(dir.empty() ? "." : dir);
  fs::create_directories(p);
  return p;
}

std::uint64_t effective_seed(const config::ExperimentConfig& cfg,
                             const std::optional<std::uint64_t>& flag) {
  return flag ? *flag : cfg.seed;
}

std::string nstr(double v) { return io::format_number(v); }

// Replicate seeds: one substream per (estimator, budget), one leaf per
// replicate.
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t estimator,
                             std::size_t budget_idx, std::size_t replicate) {
  const std::uint64_t base = rng::derive_seed(seed, rng::kStreamReplicate);
  const std::uint64_t cell =
      rng::derive_seed(base, estimator * 1000003ull + budget_idx);
  return rng::derive_seed(cell, replicate);
}

}  // namespace

int cmd_fit(const std::string& pilot_csv, const std::string& family,
            const std::string& kind, const std::string& out_dir) {
  try {
    rates::ValueKind vk;
    if (kind == "accuracy")
      vk = rates::ValueKind::accuracy_gap;
    else if (kind == "cost")
      vk = rates::ValueKind::cost;
    else
      throw ConfigError("--kind must be 'accuracy' or 'cost'");

    rates::FitFamily ff;
    if (family == "algebraic")
      ff = rates::FitFamily::algebraic;
    else if (family == "exponential")
      ff = rates::FitFamily::exponential;
    else if (family == "auto")
      ff = rates::FitFamily::automatic;
    else
      throw ConfigError("--family must be 'algebraic', 'exponential' or 'auto'");

    const rates::PilotSeries series = io::read_pilot_series(pilot_csv, vk);
    const rates::FitResult fit = rates::fit_rate(series, ff);

    const fs::path out = ensure_out_dir(out_dir);
    write_json_file(out / "fit.json", json{{"model", fit.model}, {"report", fit.report}});
    std::cout << "fit: family="
              << (fit.report.family == rates::Family::algebraic ? "algebraic"
                                                                : "exponential")
              << " scale=" << fit.model.scale << " exponent=" << fit.model.exponent
              << " r_squared=" << fit.report.r_squared << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "fit: " << e.what() << '\n';
    return 1;
  }
}

namespace {

struct PlanForBudget {
  double budget_raw = 0.0;
  double budget = 0.0;
  budget::TrainingPlan plan;
  allocate::Allocation allocation;
  double analytic_mse = 0.0;
};

PlanForBudget plan_one_budget(const config::ExperimentConfig& cfg, double raw) {
  PlanForBudget out;
  out.budget_raw = raw;
  out.budget = cfg.normalize_budget(raw);

  const budget::LabeledStats hi{cfg.high_fi.label, config::high_fi_stats(cfg)};
  std::vector<budget::LabeledStats> statics;
  for (const auto& s : cfg.statics)
    statics.push_back({s.label, config::resolve_static_stats(s)});
  std::vector<budget::TrainableSpec> specs;
  for (const auto& t : cfg.trainables) specs.push_back(t.spec);

  out.plan = budget::build_hierarchy(hi, statics, specs, out.budget);
  const double training_spent = out.budget - out.plan.residual_budget;
  allocate::Hierarchy hier{out.plan.predicted, out.plan.hierarchy};
  out.allocation = allocate::optimal_allocation(hier, out.plan.residual_budget);
  out.analytic_mse = allocate::analytic_mse(hier, out.budget, training_spent);
  return out;
}

}  // namespace

int cmd_plan(const CommonArgs& args) {
  try {
    const config::ExperimentConfig cfg = config::load_config(args.config_path);
    if (cfg.budgets.empty()) throw ConfigError("config has no budgets");
    const fs::path out = ensure_out_dir(args.out_dir);

    json plans = json::array();
    std::vector<std::vector<std::string>> alloc_rows;
    std::vector<std::vector<std::string>> split_rows;
    for (const double raw : cfg.budgets_raw) {
      PlanForBudget p;
      try {
        p = plan_one_budget(cfg, raw);
      } catch (const std::exception& e) {
        // Surface the step diagnostics gathered so far with the failure.
        std::cerr << "plan: budget " << raw << ": " << e.what() << '\n';
        return 1;
      }
      const double training = p.budget - p.plan.residual_budget;
      const double offline_share = training / p.budget;
      plans.push_back(json{{"budget_raw", p.budget_raw},
                           {"budget", p.budget},
                           {"plan", p.plan},
                           {"allocation", p.allocation},
                           {"analytic_mse", p.analytic_mse},
                           {"offline_share", offline_share},
                           {"online_share", 1.0 - offline_share}});

      for (std::size_t j = 0; j < p.plan.hierarchy.size(); ++j) {
        std::string n_train;
        for (const auto& step : p.plan.steps)
          if (step.label == p.plan.hierarchy[j])
            n_train = std::to_string(step.n_feasible);
        alloc_rows.push_back(
            {nstr(p.budget), p.plan.hierarchy[j], n_train,
             std::to_string(p.allocation.counts[j]),
             j == 0 ? "" : nstr(p.allocation.coefficients[j - 1]),
             nstr(p.plan.predicted[j].cost), nstr(p.plan.predicted[j].correlation)});
      }
      split_rows.push_back({nstr(p.budget), nstr(training),
                            nstr(p.plan.residual_budget), nstr(offline_share),
                            nstr(1.0 - offline_share)});
    }

    write_json_file(out / "plan.json", plans);
    io::write_table((out / "allocation.csv").string(),
                    {"budget", "model", "n_train", "m", "alpha", "cost", "correlation"},
                    alloc_rows);
    io::write_table((out / "budget_split.csv").string(),
                    {"budget", "offline", "online", "offline_share", "online_share"},
                    split_rows);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "plan: " << e.what() << '\n';
    return 1;
  }
}

int cmd_estimate(const CommonArgs& args, std::optional<double> budget_override) {
  try {
    const config::ExperimentConfig cfg = config::load_config(args.config_path);
    const std::uint64_t seed = effective_seed(cfg, args.seed);
    double raw = 0.0;
    if (budget_override)
      raw = *budget_override;
    else if (!cfg.budgets_raw.empty())
      raw = cfg.budgets_raw.back();
    else
      throw ConfigError("no budget: pass --budget or configure budgets");
    const fs::path out = ensure_out_dir(args.out_dir);

    const PlanForBudget planned = plan_one_budget(cfg, raw);
    const engine::ModelSet models = config::build_model_set(cfg);
    const engine::CaMfmcReport report = engine::run_ca_mfmc(
        models, planned.plan, planned.budget, seed, cfg.run_options());

    json doc{{"budget_raw", raw},
             {"budget", planned.budget},
             {"seed", seed},
             {"plan", planned.plan},
             {"report", report}};
    if (models.exact_mean) doc["exact_mean"] = *models.exact_mean;
    if (report.failed) {
      doc["error"] = report.error;
      write_json_file(out / "estimate.json", doc);
      std::cerr << "estimate: " << report.error << '\n';
      return 1;
    }
    write_json_file(out / "estimate.json", doc);
    std::cout << "estimate: " << io::format_number(report.estimate) << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "estimate: " << e.what() << '\n';
    return 1;
  }
}

namespace {

struct BenchmarkContext {
  const config::ExperimentConfig& cfg;
  engine::ModelSet models;
  stats::ModelStats hi_stats;
  std::vector<stats::ModelStats> static_stats;  // hierarchy with statics only
  std::uint64_t seed = 0;
};

// One replicate of one estimator at one normalized budget.
double run_replicate(BenchmarkContext& ctx, const std::string& estimator,
                     double p, const budget::TrainingPlan* plan,
                     std::uint64_t rep_seed) {
  engine::BudgetLedger ledger;
  ledger.budget = p;
  ledger.charge_pilot = ctx.cfg.charge_pilot;
  if (estimator == "mc") {
    const auto m = static_cast<std::size_t>(std::floor(p));
    return engine::mc_estimate(*ctx.models.high_fi, m,
                               rng::derive_seed(rep_seed, rng::kStreamSamples),
                               ctx.models.box, ledger);
  }
  if (estimator == "mfmc") {
    allocate::Hierarchy hier;
    hier.stats.push_back(ctx.hi_stats);
    hier.labels.push_back(ctx.models.high_fi->label());
    std::vector<std::shared_ptr<engine::Model>> ordered{ctx.models.high_fi};
    for (std::size_t i = 0; i < ctx.models.statics.size(); ++i) {
      hier.stats.push_back(ctx.static_stats[i]);
      hier.labels.push_back(ctx.models.statics[i].model->label());
      ordered.push_back(ctx.models.statics[i].model);
    }
    const allocate::Allocation alloc = allocate::optimal_allocation(hier, p);
    const engine::SampleBatch batch(
        rng::derive_seed(rep_seed, rng::kStreamSamples),
        static_cast<std::size_t>(alloc.counts.back()), ctx.models.box);
    return engine::mfmc_estimate(ordered, alloc, batch, ledger).estimate;
  }
  // camfmc
  const engine::CaMfmcReport rep = engine::run_ca_mfmc(
      ctx.models, *plan, p, rep_seed, ctx.cfg.run_options());
  if (rep.failed) throw Error("camfmc replicate failed: " + rep.error);
  return rep.estimate;
}

}  // namespace

int cmd_benchmark(const CommonArgs& args, std::optional<int> replicates_override) {
  try {
    const config::ExperimentConfig cfg = config::load_config(args.config_path);
    if (cfg.budgets.empty()) throw ConfigError("config has no budgets");
    const int n_rep = replicates_override ? *replicates_override : cfg.replicates;
    if (n_rep < 2) std::cerr << "benchmark: warning: replicates < 2\n";
    const fs::path out = ensure_out_dir(args.out_dir);

    BenchmarkContext ctx{cfg, config::build_model_set(cfg),
                         config::high_fi_stats(cfg), {}, 0};
    ctx.seed = effective_seed(cfg, args.seed);
    for (const auto& s : cfg.statics)
      ctx.static_stats.push_back(config::resolve_static_stats(s));

    // Reference: exact synthetic mean, else configured, else a high-budget run.
    double reference = 0.0;
    if (cfg.reference)
      reference = *cfg.reference;
    else if (ctx.models.exact_mean)
      reference = *ctx.models.exact_mean;
    else {
      const double p_ref =
          10.0 * *std::max_element(cfg.budgets.begin(), cfg.budgets.end());
      const PlanForBudget planned = plan_one_budget(
          cfg, cfg.budgets_in_seconds ? p_ref * cfg.w0_seconds : p_ref);
      const engine::CaMfmcReport rep = engine::run_ca_mfmc(
          ctx.models, planned.plan, planned.budget,
          rng::derive_seed(ctx.seed, rng::kStreamReference), cfg.run_options());
      if (rep.failed) throw Error("reference run failed: " + rep.error);
      reference = rep.estimate;
    }

    std::vector<std::vector<std::string>> rows;
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      const std::string& estimator = cfg.estimators[e];
      for (std::size_t b = 0; b < cfg.budgets.size(); ++b) {
        const double p = cfg.budgets[b];
        budget::TrainingPlan plan;
        double analytic = 0.0;
        if (estimator == "mc") {
          const double s0 = ctx.hi_stats.stddev;
          analytic = s0 * s0 / p;
        } else if (estimator == "mfmc") {
          allocate::Hierarchy hier;
          hier.stats.push_back(ctx.hi_stats);
          hier.labels.push_back("f0");
          for (std::size_t i = 0; i < ctx.static_stats.size(); ++i) {
            hier.stats.push_back(ctx.static_stats[i]);
            hier.labels.push_back(cfg.statics[i].label);
          }
          analytic = allocate::analytic_mse(hier, p, 0.0);
        } else {
          const PlanForBudget planned = plan_one_budget(cfg, cfg.budgets_raw[b]);
          plan = planned.plan;
          analytic = planned.analytic_mse;
        }

        std::vector<double> estimates(static_cast<std::size_t>(n_rep));
        // External child processes cannot serve interleaved requests, so
        // replicates only run concurrently for all-synthetic model sets.
        bool has_external = cfg.high_fi.kind == config::HighFiConfig::Kind::external;
        for (const auto& s : cfg.statics)
          if (s.model.value("type", std::string()) == "external") has_external = true;
        for (const auto& t : cfg.trainables)
          if (t.model.value("type", std::string()) == "external") has_external = true;
        if (has_external) {
          for (long long r = 0; r < n_rep; ++r)
            estimates[static_cast<std::size_t>(r)] = run_replicate(
                ctx, estimator, p, &plan,
                replicate_seed(ctx.seed, e, b, static_cast<std::size_t>(r)));
        } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
          for (long long r = 0; r < n_rep; ++r)
            estimates[static_cast<std::size_t>(r)] = run_replicate(
                ctx, estimator, p, &plan,
                replicate_seed(ctx.seed, e, b, static_cast<std::size_t>(r)));
        }
        const double emp = stats::replicate_mse(estimates, reference);
        rows.push_back({estimator, nstr(p), nstr(emp), nstr(analytic)});
      }
    }
    io::write_table((out / "benchmark.csv").string(),
                    {"estimator", "budget", "empirical_mse", "analytic_mse"}, rows);
    write_json_file(out / "benchmark_meta.json",
                    json{{"reference", reference},
                         {"replicates", n_rep},
                         {"seed", ctx.seed},
                         {"estimators", cfg.estimators},
                         {"budgets", cfg.budgets}});
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "benchmark: " << e.what() << '\n';
    return 1;
  }
}

int cmd_select(const CommonArgs& args) {
  try {
    const config::ExperimentConfig cfg = config::load_config(args.config_path);
    if (cfg.budgets.empty()) throw ConfigError("config has no budgets");
    const fs::path out = ensure_out_dir(args.out_dir);

    const stats::ModelStats hi = config::high_fi_stats(cfg);
    const auto candidates = config::build_candidates(cfg);
    const allocate::SelectionTable table =
        allocate::select_models(hi, candidates, cfg.budgets);

    std::vector<std::vector<std::string>> rows;
    for (const auto& subset : table.subsets) {
      std::string name = "mc";
      if (!subset.members.empty()) {
        name.clear();
        for (std::size_t i = 0; i < subset.members.size(); ++i)
          name += (i ? "+" : "") + subset.members[i];
      }
      if (!subset.admissible) continue;
      for (std::size_t b = 0; b < table.budgets.size(); ++b)
        rows.push_back({name, nstr(table.budgets[b]), nstr(subset.mse_per_budget[b])});
    }
    io::write_table((out / "select.csv").string(), {"subset", "budget", "analytic_mse"}, rows);
    write_json_file(out / "select_ranking.json", json(table));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "select: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace camfmc::cli
