#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace camfmc::stats {

// Measured triple for one concrete model, in units where the high-fidelity
// model has cost 1. The high-fidelity model's own stats are (1, 1, sigma0).
struct ModelStats {
  double cost = 1.0;         // w_j
  double correlation = 1.0;  // Pearson rho_j against model 0
  double stddev = 0.0;       // sigma_j
};

// Shared pilot evaluations: every model evaluated at every pilot input.
struct PilotMatrix {
  std::size_t dimension = 0;   // input coordinates per row
  std::size_t model_count = 0; // outputs per row, model 0 is high-fidelity
  std::vector<std::vector<double>> inputs;   // one row per pilot sample
  std::vector<std::vector<double>> outputs;  // one row per pilot sample

  std::size_t sample_count() const { return outputs.size(); }
  std::vector<double> output_column(std::size_t model) const;
};

// Per-model stats from shared pilot runs: stddev with the unbiased (n-1)
// denominator, Pearson correlation against column 0 (column 0 gets exactly 1),
// costs normalized so model 0 has cost 1. Throws on fewer than 2 samples,
// incomplete rows, or a zero-variance column.
std::vector<ModelStats> pilot_stats(const PilotMatrix& matrix,
                                    std::span<const double> measured_costs);

// (1/N) * sum (reference - estimate)^2. Throws on an empty list.
double replicate_mse(std::span<const double> estimates, double reference);

// Helpers shared with the engine and tests.
double sample_mean(std::span<const double> x);
double sample_stddev(std::span<const double> x);  // (n-1) denominator
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace camfmc::stats
