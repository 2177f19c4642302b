#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camfmc/allocate.hpp"
#include "camfmc/budget.hpp"
#include "camfmc/stats.hpp"

namespace camfmc::engine {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

struct UniformBox {
  std::vector<Interval> bounds;
  static UniformBox unit(std::size_t dimension);
  std::size_t dimension() const { return bounds.size(); }
  bool is_unit() const;
};

// Reproducible i.i.d. inputs from the uniform box. The batch is a pure
// function of (seed, count, bounds); drawing a longer batch with the same
// seed extends the shorter one, so model j consumes exactly the first m_j
// inputs of the single shared stream.
class SampleBatch {
 public:
  SampleBatch(std::uint64_t seed, std::size_t count, UniformBox box);

  std::uint64_t seed() const { return seed_; }
  std::size_t count() const { return count_; }
  std::size_t dimension() const { return box_.dimension(); }
  const UniformBox& box() const { return box_; }
  std::span<const double> input(std::size_t i) const {
    return {data_.data() + i * dimension(), dimension()};
  }

 private:
  std::uint64_t seed_ = 0;
  std::size_t count_ = 0;
  UniformBox box_;
  std::vector<double> data_;  // row-major
};

SampleBatch draw_samples(std::uint64_t seed, std::size_t count, const UniformBox& box);

// Invoked as work completes: (evaluations finished, cost in w0 units).
// External models report per chunk, so a mid-batch failure still leaves the
// completed work charged.
using ChargeSink = std::function<void(std::size_t evals, double cost)>;

// One evaluable model. For a fixed trained state the evaluation is a
// deterministic function of the input.
class Model {
 public:
  virtual ~Model() = default;
  virtual const std::string& label() const = 0;
  // Cost of one evaluation in units of one high-fidelity run (virtual for
  // synthetic models, measured for external ones).
  virtual double cost_per_eval() const = 0;
  // Outputs for the first m batch inputs, in input order.
  virtual std::vector<double> evaluate_batch(const SampleBatch& batch, std::size_t m,
                                             const ChargeSink& charge) = 0;
};

// f0(theta) = a . theta on the unit box, with exact mean sum(a_i)/2 and
// variance sum(a_i^2)/12.
class SyntheticHighFidelity final : public Model {
 public:
  explicit SyntheticHighFidelity(std::vector<double> weights, std::string label = "f0");
  const std::string& label() const override { return label_; }
  double cost_per_eval() const override { return 1.0; }
  std::vector<double> evaluate_batch(const SampleBatch& batch, std::size_t m,
                                     const ChargeSink& charge) override;

  double value(std::span<const double> theta) const;
  double exact_mean() const { return mean_; }
  double exact_variance() const { return variance_; }
  std::size_t dimension() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }

 private:
  std::vector<double> weights_;
  std::string label_;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

// f(theta) = f0(theta) + tau * g(theta) with g = sqrt(2) cos(2 pi theta_1),
// which has mean 0, unit variance and zero covariance with the linear f0
// under the unit-box uniform, so rho^2 = sigma0^2 / (sigma0^2 + tau^2)
// exactly (valid for d = 1 too).
class SyntheticLowFidelity final : public Model {
 public:
  SyntheticLowFidelity(std::shared_ptr<const SyntheticHighFidelity> base,
                       double tau, double cost, std::string label);
  const std::string& label() const override { return label_; }
  double cost_per_eval() const override { return cost_; }
  std::vector<double> evaluate_batch(const SampleBatch& batch, std::size_t m,
                                     const ChargeSink& charge) override;

  double exact_correlation() const;
  double exact_variance() const;
  double tau() const { return tau_; }

 private:
  std::shared_ptr<const SyntheticHighFidelity> base_;
  double tau_ = 0.0;
  double cost_ = 1.0;
  std::string label_;
};

// Trains the synthetic low-fidelity model that realizes the accuracy bound
// exactly: 1 - rho^2(n) = c_a r_a(n), virtual cost c_c r_c(n). Throws when
// the bound is uninformative at n (c_a r_a(n) >= 1).
std::shared_ptr<SyntheticLowFidelity> synthetic_lowfi_train(
    std::shared_ptr<const SyntheticHighFidelity> base,
    const rates::RateModel& accuracy, const rates::RateModel& cost, long long n,
    std::string label);

// Static synthetic model with exact correlation rho in (0, 1] and cost w.
std::shared_ptr<SyntheticLowFidelity> synthetic_correlated(
    std::shared_ptr<const SyntheticHighFidelity> base, double rho, double cost,
    std::string label);

struct BudgetLedger {
  double budget = 0.0;
  double spent_training = 0.0;
  double spent_sampling = 0.0;
  double spent_pilot = 0.0;   // recorded always, charged only if charge_pilot
  bool charge_pilot = false;  // pilots default to exempt pre-existing data
  std::map<std::string, long long> eval_counts;

  double charged() const {
    return spent_training + spent_sampling + (charge_pilot ? spent_pilot : 0.0);
  }
  double available() const { return budget - charged(); }
  void charge_training(double amount);
};

enum class ChargeKind { sampling, pilot };

// Evaluates the first m shared inputs and charges the ledger; refuses
// (throws BudgetError) before any evaluation if the projected charge exceeds
// the remaining budget.
std::vector<double> evaluate(Model& model, const SampleBatch& batch, std::size_t m,
                             BudgetLedger& ledger,
                             ChargeKind kind = ChargeKind::sampling);

// (1/m) sum f(theta_i) over the first m inputs of the shared stream.
double mc_estimate(Model& model, std::size_t m, const SampleBatch& batch,
                   BudgetLedger& ledger);
double mc_estimate(Model& model, std::size_t m, std::uint64_t seed,
                   const UniformBox& box, BudgetLedger& ledger);

struct MfmcReport {
  double estimate = 0.0;
  std::vector<double> model_means;       // mean of model j over its m_j samples
  std::vector<double> model_means_prev;  // mean of model j over m_{j-1} samples
};

// E = E0_{m0} + sum_j alpha_j (Ej_{mj} - Ej_{m_{j-1}}); all models share one
// sample stream and model j sees exactly its first m_j entries.
MfmcReport mfmc_estimate(std::span<const std::shared_ptr<Model>> models,
                         const allocate::Allocation& allocation,
                         const SampleBatch& batch, BudgetLedger& ledger);

// A trainable model: the rate bounds plus the hook that actually trains it.
struct TrainableModel {
  budget::TrainableSpec spec;
  std::function<std::shared_ptr<Model>(long long n, std::uint64_t seed)> train;
};

struct StaticModel {
  std::shared_ptr<Model> model;
  stats::ModelStats stats;  // configured/measured stats
};

struct ModelSet {
  std::shared_ptr<Model> high_fi;
  std::optional<double> exact_mean;      // synthetic reference mu0
  std::optional<double> exact_variance;  // synthetic sigma0^2
  UniformBox box;
  std::vector<StaticModel> statics;
  std::vector<TrainableModel> trainables;
};

struct RunOptions {
  enum class StatsMode { measured, predicted };
  // `measured` re-estimates (rho, sigma, w) from a post-training pilot;
  // `predicted` uses configured stats and rate bounds (exact for the
  // synthetic family).
  StatsMode stats_mode = StatsMode::measured;
  std::size_t pilot_count = 100;
  bool charge_pilot = false;
};

struct CaMfmcReport {
  double estimate = 0.0;
  allocate::Hierarchy hierarchy;  // stats the allocation actually used
  allocate::Allocation allocation;
  std::vector<stats::ModelStats> predicted;  // rate-bound stats, plan order
  double analytic_mse = 0.0;  // CA form at (budget, training spent)
  BudgetLedger ledger;
  MfmcReport sampling;
  std::vector<std::string> notes;
  // Evaluation failures keep the partial ledger instead of throwing, so the
  // spent budget can be persisted.
  bool failed = false;
  std::string error;
  std::optional<std::size_t> failed_sample;
};

// Executes a training plan: trains each trainable at its n_feasible (charging
// n * w0), derives or measures the model stats, re-validates the ordering
// (reordering if needed, recorded), recomputes the allocation on the residual
// budget and runs the multi-fidelity estimator.
CaMfmcReport run_ca_mfmc(const ModelSet& models, const budget::TrainingPlan& plan,
                         double budget, std::uint64_t seed, const RunOptions& opts);

}  // namespace camfmc::engine
