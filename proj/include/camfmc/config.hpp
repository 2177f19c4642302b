#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "camfmc/allocate.hpp"
#include "camfmc/budget.hpp"
#include "camfmc/engine.hpp"

namespace camfmc::config {

struct HighFiConfig {
  enum class Kind { synthetic, external };
  Kind kind = Kind::synthetic;
  std::string label = "f0";
  std::vector<double> weights;          // synthetic
  std::string command;                  // external
  std::string workdir;
  std::size_t chunk = 64;               // external eval request size
  std::optional<double> variance;       // sigma0^2 when not derivable
};

struct StaticConfig {
  std::string label;
  std::optional<stats::ModelStats> stats;
  std::string pilot_csv;     // alternative stats source (f_0, f_j columns)
  double pilot_cost = 0.0;   // w_j to pair with the pilot CSV
  nlohmann::json model;      // executable model spec, may be empty
};

struct TrainableConfig {
  budget::TrainableSpec spec;
  nlohmann::json model;  // executable model spec, may be empty
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t dimension = 0;
  engine::UniformBox box;  // unit box when bounds are omitted
  HighFiConfig high_fi;
  double w0_seconds = 1.0;         // high_fidelity_cost_seconds
  bool budgets_in_seconds = false;
  std::vector<double> budgets_raw;
  std::vector<double> budgets;     // normalized to w0 = 1
  int replicates = 100;
  std::size_t pilot_samples = 100;
  bool charge_pilot = false;
  engine::RunOptions::StatsMode stats_mode =
      engine::RunOptions::StatsMode::measured;
  std::optional<double> reference;
  std::vector<std::string> estimators = {"mc", "mfmc", "camfmc"};
  std::vector<StaticConfig> statics;
  std::vector<TrainableConfig> trainables;

  double normalize_budget(double raw) const {
    return budgets_in_seconds ? raw / w0_seconds : raw;
  }
  engine::RunOptions run_options() const {
    engine::RunOptions o;
    o.stats_mode = stats_mode;
    o.pilot_count = pilot_samples;
    o.charge_pilot = charge_pilot;
    return o;
  }
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Stats for one static model, reading its pilot CSV when configured inline
// stats are absent.
stats::ModelStats resolve_static_stats(const StaticConfig& s);

// High-fidelity stats (cost 1, correlation 1, stddev): exact for synthetic
// weights, from the configured variance otherwise.
stats::ModelStats high_fi_stats(const ExperimentConfig& cfg);

// Candidate list for model selection: statics by measured stats, trainables
// by their rate bounds.
std::vector<allocate::Candidate> build_candidates(const ExperimentConfig& cfg);

// Executable models for estimator runs. Throws ConfigError when a configured
// model lacks an executable backing.
engine::ModelSet build_model_set(const ExperimentConfig& cfg);

}  // namespace camfmc::config
