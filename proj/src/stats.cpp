#include "camfmc/stats.hpp"

#include <algorithm>
#include <cmath>

#include "camfmc/errors.hpp"
#include "camfmc/kernels.hpp"

namespace camfmc::stats {

std::vector<double> PilotMatrix::output_column(std::size_t model) const {
  std::vector<double> col(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) col[i] = outputs[i][model];
  return col;
}

double sample_mean(std::span<const double> x) {
  if (x.empty()) throw Error("mean of empty sample");
  return kernels::sum(x) / static_cast<double>(x.size());
}

namespace {

// Centered cross-sum via deterministic blocked reduction.
double centered_product_sum(std::span<const double> x, double mx,
                            std::span<const double> y, double my) {
  std::vector<double> prod(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    prod[i] = (x[i] - mx) * (y[i] - my);
  return kernels::sum(prod);
}

}  // namespace

double sample_stddev(std::span<const double> x) {
  if (x.size() < 2) throw Error("sample stddev needs at least 2 values");
  const double m = sample_mean(x);
  const double ss = centered_product_sum(x, m, x, m);
  return std::sqrt(std::max(0.0, ss / static_cast<double>(x.size() - 1)));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  if (x.size() < 2) throw Error("pearson needs at least 2 samples");
  const double mx = sample_mean(x);
  const double my = sample_mean(y);
  const double sxx = centered_product_sum(x, mx, x, mx);
  const double syy = centered_product_sum(y, my, y, my);
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw Error("pearson correlation undefined for a zero-variance column");
  const double sxy = centered_product_sum(x, mx, y, my);
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<ModelStats> pilot_stats(const PilotMatrix& matrix,
                                    std::span<const double> measured_costs) {
  const std::size_t n = matrix.sample_count();
  if (n < 2) throw Error("pilot_stats needs at least 2 samples");
  if (matrix.model_count == 0) throw Error("pilot_stats: no models");
  if (measured_costs.size() != matrix.model_count)
    throw Error("pilot_stats: one cost per model required");
  for (const auto& row : matrix.outputs)
    if (row.size() != matrix.model_count)
      throw Error("pilot_stats: incomplete output row");
  for (std::size_t j = 0; j < matrix.model_count; ++j)
    if (!(measured_costs[j] > 0.0))
      throw Error("pilot_stats: costs must be positive");

  const std::vector<double> hi = matrix.output_column(0);
  std::vector<ModelStats> out(matrix.model_count);
  for (std::size_t j = 0; j < matrix.model_count; ++j) {
    const std::vector<double> col = j == 0 ? hi : matrix.output_column(j);
    ModelStats s;
    s.cost = measured_costs[j] / measured_costs[0];
    s.stddev = sample_stddev(col);
    s.correlation = j == 0 ? 1.0 : pearson(hi, col);
    out[j] = s;
  }
  return out;
}

double replicate_mse(std::span<const double> estimates, double reference) {
  if (estimates.empty()) throw Error("replicate_mse of empty estimate list");
  std::vector<double> sq(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = reference - estimates[i];
    sq[i] = d * d;
  }
  return kernels::sum(sq) / static_cast<double>(estimates.size());
}

}  // namespace camfmc::stats
