#include <CLI11.hpp>

#include "camfmc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "camfmc: context-aware multi-fidelity Monte Carlo estimation.\n"
      "Fits accuracy/cost rates, splits budgets between training and sampling,\n"
      "and runs MC/MFMC/CA-MFMC estimators."};
  app.require_subcommand(1);

  camfmc::cli::CommonArgs common;
  std::string pilot_csv;
  std::string family = "auto";
  std::string kind = "accuracy";
  std::optional<double> budget;
  std::optional<int> replicates;
  std::optional<std::uint64_t> seed;

  auto* fit = app.add_subcommand("fit", "fit a rate model to a pilot series CSV");
  fit->add_option("pilot", pilot_csv, "pilot CSV with header n,value")->required();
  fit->add_option("--family", family, "algebraic|exponential|auto");
  fit->add_option("--kind", kind, "accuracy|cost");
  fit->add_option("--out", common.out_dir, "output directory");

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "experiment config JSON")
        ->required();
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_option("--seed", seed, "seed override");
  };

  auto* plan = app.add_subcommand("plan", "training plan and sample allocation");
  add_common(plan);

  auto* estimate = app.add_subcommand("estimate", "run the CA-MFMC pipeline once");
  add_common(estimate);
  estimate->add_option("--budget", budget, "budget (config units)");

  auto* benchmark =
      app.add_subcommand("benchmark", "replicate MSE study over estimators");
  add_common(benchmark);
  benchmark->add_option("--replicates", replicates, "replicates per cell");

  auto* select = app.add_subcommand("select", "rank model subsets by analytic MSE");
  add_common(select);

  CLI11_PARSE(app, argc, argv);
  common.seed = seed;

  if (fit->parsed())
    return camfmc::cli::cmd_fit(pilot_csv, family, kind, common.out_dir);
  if (plan->parsed()) return camfmc::cli::cmd_plan(common);
  if (estimate->parsed()) return camfmc::cli::cmd_estimate(common, budget);
  if (benchmark->parsed()) return camfmc::cli::cmd_benchmark(common, replicates);
  if (select->parsed()) return camfmc::cli::cmd_select(common);
  return 1;
}
