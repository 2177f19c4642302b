#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace camfmc::cli {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config seed
};

// fit: pilot CSV -> rate-model JSON (<out>/fit.json) plus a fit report.
int cmd_fit(const std::string& pilot_csv, const std::string& family,
            const std::string& kind, const std::string& out_dir);

// plan: training plan + allocation per budget
// (<out>/plan.json, allocation.csv, budget_split.csv).
int cmd_plan(const CommonArgs& args);

// estimate: one full pipeline run (<out>/estimate.json).
int cmd_estimate(const CommonArgs& args, std::optional<double> budget_override);

// benchmark: replicate MSE study (<out>/benchmark.csv).
int cmd_benchmark(const CommonArgs& args, std::optional<int> replicates_override);

// select: ranked model subsets (<out>/select.csv, select_ranking.json).
int cmd_select(const CommonArgs& args);

}  // namespace camfmc::cli
