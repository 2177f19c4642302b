#include "camfmc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "camfmc/errors.hpp"
#include "camfmc/kernels.hpp"
#include "camfmc/rng.hpp"

namespace camfmc::engine {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

UniformBox UniformBox::unit(std::size_t dimension) {
  UniformBox box;
  box.bounds.assign(dimension, Interval{0.0, 1.0});
  return box;
}

bool UniformBox::is_unit() const {
  for (const auto& b : bounds)
    if (b.lo != 0.0 || b.hi != 1.0) return false;
  return !bounds.empty();
}

SampleBatch::SampleBatch(std::uint64_t seed, std::size_t count, UniformBox box)
    : seed_(seed), count_(count), box_(std::move(box)) {
  const std::size_t d = box_.dimension();
  if (d == 0) throw Error("sample batch needs dimension >= 1");
  if (count == 0) throw Error("sample batch needs count >= 1");
  for (std::size_t c = 0; c < d; ++c) {
    const auto& b = box_.bounds[c];
    if (!(b.hi > b.lo) || !std::isfinite(b.lo) || !std::isfinite(b.hi))
      throw Error("invalid bounds for coordinate " + std::to_string(c + 1));
  }
  data_.resize(count * d);
  const auto* bounds = box_.bounds.data();
  kernels::map_index(count * d, data_, [seed, d, bounds](std::size_t e) {
    const std::size_t i = e / d;
    const std::size_t c = e % d;
    const double u = rng::uniform01(seed, i, c);
    return bounds[c].lo + (bounds[c].hi - bounds[c].lo) * u;
  });
}

SampleBatch draw_samples(std::uint64_t seed, std::size_t count, const UniformBox& box) {
  return SampleBatch(seed, count, box);
}

SyntheticHighFidelity::SyntheticHighFidelity(std::vector<double> weights,
                                             std::string label)
    : weights_(std::move(weights)), label_(std::move(label)) {
  if (weights_.empty()) throw Error("synthetic model needs at least 1 weight");
  double s = 0.0, s2 = 0.0;
  for (const double a : weights_) {
    s += a;
    s2 += a * a;
  }
  mean_ = s / 2.0;
  variance_ = s2 / 12.0;
}

double SyntheticHighFidelity::value(std::span<const double> theta) const {
  if (theta.size() != weights_.size())
    throw Error("synthetic model: input dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * theta[i];
  return s;
}

namespace {

void require_unit_box(const SampleBatch& batch, const std::string& label) {
  if (!batch.box().is_unit())
    throw Error("synthetic model '" + label +
                "' requires the unit box input distribution");
}

void require_prefix(const SampleBatch& batch, std::size_t m) {
  if (m > batch.count())
    throw Error("batch holds " + std::to_string(batch.count()) +
                " samples, prefix of " + std::to_string(m) + " requested");
}

}  // namespace

std::vector<double> SyntheticHighFidelity::evaluate_batch(const SampleBatch& batch,
                                                          std::size_t m,
                                                          const ChargeSink& charge) {
  require_unit_box(batch, label_);
  require_prefix(batch, m);
  if (batch.dimension() != weights_.size())
    throw Error("synthetic model '" + label_ + "': dimension mismatch");
  std::vector<double> out(m);
  const auto* w = weights_.data();
  const std::size_t d = weights_.size();
  kernels::map_index(m, out, [&batch, w, d](std::size_t i) {
    const auto theta = batch.input(i);
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += w[c] * theta[c];
    return s;
  });
  if (charge) charge(m, static_cast<double>(m) * cost_per_eval());
  return out;
}

SyntheticLowFidelity::SyntheticLowFidelity(
    std::shared_ptr<const SyntheticHighFidelity> base, double tau, double cost,
    std::string label)
    : base_(std::move(base)), tau_(tau), cost_(cost), label_(std::move(label)) {
  if (!base_) throw Error("synthetic low-fidelity model needs a base model");
  if (!(cost_ > 0.0)) throw Error("model cost must be positive");
}

double SyntheticLowFidelity::exact_variance() const {
  return base_->exact_variance() + tau_ * tau_;
}

double SyntheticLowFidelity::exact_correlation() const {
  const double s0 = std::sqrt(base_->exact_variance());
  return s0 / std::sqrt(exact_variance());
}

std::vector<double> SyntheticLowFidelity::evaluate_batch(const SampleBatch& batch,
                                                         std::size_t m,
                                                         const ChargeSink& charge) {
  require_unit_box(batch, label_);
  require_prefix(batch, m);
  std::vector<double> out(m);
  const double tau = tau_;
  const auto& base = *base_;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double sqrt2 = std::numbers::sqrt2;
  kernels::map_index(m, out, [&batch, &base, tau, two_pi, sqrt2](std::size_t i) {
    const auto theta = batch.input(i);
    return base.value(theta) + tau * sqrt2 * std::cos(two_pi * theta[0]);
  });
  if (charge) charge(m, static_cast<double>(m) * cost_);
  return out;
}

std::shared_ptr<SyntheticLowFidelity> synthetic_lowfi_train(
    std::shared_ptr<const SyntheticHighFidelity> base,
    const rates::RateModel& accuracy, const rates::RateModel& cost, long long n,
    std::string label) {
  if (n < 1) throw Error("training size must be >= 1");
  const double q = rates::eval_rate(accuracy, static_cast<double>(n));
  if (q >= 1.0)
    throw Error("accuracy bound " + fmt(q) + " at n = " + std::to_string(n) +
                " is not informative (needs c_a r_a(n) < 1)");
  const double sigma0_sq = base->exact_variance();
  const double tau = q > 0.0 ? std::sqrt(sigma0_sq * q / (1.0 - q)) : 0.0;
  const double w = rates::eval_rate(cost, static_cast<double>(n));
  return std::make_shared<SyntheticLowFidelity>(std::move(base), tau, w,
                                                std::move(label));
}

std::shared_ptr<SyntheticLowFidelity> synthetic_correlated(
    std::shared_ptr<const SyntheticHighFidelity> base, double rho, double cost,
    std::string label) {
  if (!(rho > 0.0) || rho > 1.0)
    throw Error("synthetic correlated model needs rho in (0, 1]");
  const double sigma0_sq = base->exact_variance();
  const double tau =
      rho < 1.0 ? std::sqrt(sigma0_sq * (1.0 - rho * rho) / (rho * rho)) : 0.0;
  return std::make_shared<SyntheticLowFidelity>(std::move(base), tau, cost,
                                                std::move(label));
}

void BudgetLedger::charge_training(double amount) {
  const double tol = 1e-9 * std::max(1.0, budget);
  if (charged() + amount > budget + tol)
    throw BudgetError("training charge " + fmt(amount) + " exceeds remaining budget " +
                      fmt(available()));
  spent_training += amount;
}

std::vector<double> evaluate(Model& model, const SampleBatch& batch, std::size_t m,
                             BudgetLedger& ledger, ChargeKind kind) {
  require_prefix(batch, m);
  if (m == 0) return {};
  const bool counted = kind == ChargeKind::sampling || ledger.charge_pilot;
  const double projected = static_cast<double>(m) * model.cost_per_eval();
  const double tol = 1e-9 * std::max(1.0, ledger.budget);
  if (counted && projected > ledger.available() + tol)
    throw BudgetError("refusing to evaluate '" + model.label() + "' on " +
                      std::to_string(m) + " samples: projected cost " +
                      fmt(projected) + " exceeds remaining budget " +
                      fmt(ledger.available()));
  double* spent = kind == ChargeKind::sampling ? &ledger.spent_sampling
                                               : &ledger.spent_pilot;
  auto& count = ledger.eval_counts[model.label()];
  auto sink = [&](std::size_t evals, double cost) {
    count += static_cast<long long>(evals);
    *spent += cost;
  };
  return model.evaluate_batch(batch, m, sink);
}

double mc_estimate(Model& model, std::size_t m, const SampleBatch& batch,
                   BudgetLedger& ledger) {
  if (m == 0) throw Error("mc_estimate needs m >= 1");
  const std::vector<double> out = evaluate(model, batch, m, ledger);
  return kernels::mean(out);
}

double mc_estimate(Model& model, std::size_t m, std::uint64_t seed,
                   const UniformBox& box, BudgetLedger& ledger) {
  const SampleBatch batch(seed, m, box);
  return mc_estimate(model, m, batch, ledger);
}

MfmcReport mfmc_estimate(std::span<const std::shared_ptr<Model>> models,
                         const allocate::Allocation& allocation,
                         const SampleBatch& batch, BudgetLedger& ledger) {
  const std::size_t k1 = models.size();
  if (k1 == 0) throw Error("mfmc_estimate needs at least the high-fidelity model");
  if (allocation.counts.size() != k1)
    throw Error("allocation covers " + std::to_string(allocation.counts.size()) +
                " models, hierarchy has " + std::to_string(k1));
  if (allocation.coefficients.size() + 1 != k1)
    throw Error("allocation coefficient count mismatch");
  for (std::size_t j = 0; j + 1 < k1; ++j)
    if (allocation.counts[j] > allocation.counts[j + 1])
      throw Error("allocation counts must be non-decreasing");
  if (allocation.counts[0] < 1) throw Error("m_0 must be >= 1");
  require_prefix(batch, static_cast<std::size_t>(allocation.counts.back()));

  MfmcReport report;
  report.model_means.resize(k1);
  report.model_means_prev.resize(k1);

  for (std::size_t j = 0; j < k1; ++j) {
    const auto mj = static_cast<std::size_t>(allocation.counts[j]);
    const std::vector<double> out = evaluate(*models[j], batch, mj, ledger);
    report.model_means[j] = kernels::mean(out);
    if (j == 0) {
      report.model_means_prev[j] = report.model_means[j];
      report.estimate = report.model_means[j];
    } else {
      const auto mprev = static_cast<std::size_t>(allocation.counts[j - 1]);
      const double mean_prev =
          kernels::sum(std::span(out).first(mprev)) / static_cast<double>(mprev);
      report.model_means_prev[j] = mean_prev;
      report.estimate +=
          allocation.coefficients[j - 1] * (report.model_means[j] - mean_prev);
    }
  }
  return report;
}

namespace {

void run_ca_mfmc_body(const ModelSet& models, const budget::TrainingPlan& plan,
                      double budget, std::uint64_t seed, const RunOptions& opts,
                      CaMfmcReport& report) {
  // Train each planned model, charging n_feasible high-fidelity runs.
  std::map<std::string, std::shared_ptr<Model>> by_label;
  by_label[models.high_fi->label()] = models.high_fi;
  for (const auto& s : models.statics) by_label[s.model->label()] = s.model;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& step = plan.steps[i];
    const auto it = std::find_if(models.trainables.begin(), models.trainables.end(),
                                 [&](const TrainableModel& t) {
                                   return t.spec.label == step.label;
                                 });
    if (it == models.trainables.end())
      throw Error("plan step '" + step.label + "' has no trainable model");
    report.ledger.charge_training(static_cast<double>(step.n_feasible));
    const std::uint64_t train_seed =
        rng::derive_seed(seed, rng::kStreamTraining + i);
    by_label[step.label] = it->train(step.n_feasible, train_seed);
  }

  // Assemble the hierarchy in plan order with the requested stats mode.
  std::vector<std::shared_ptr<Model>> ordered;
  for (const auto& label : plan.hierarchy) {
    const auto it = by_label.find(label);
    if (it == by_label.end())
      throw Error("plan names model '" + label + "' that is not available");
    ordered.push_back(it->second);
  }
  report.predicted = plan.predicted;

  std::vector<stats::ModelStats> used = plan.predicted;
  if (opts.stats_mode == RunOptions::StatsMode::measured) {
    const SampleBatch pilot(rng::derive_seed(seed, rng::kStreamPilot),
                            opts.pilot_count, models.box);
    stats::PilotMatrix matrix;
    matrix.dimension = models.box.dimension();
    matrix.model_count = ordered.size();
    matrix.outputs.assign(opts.pilot_count, std::vector<double>(ordered.size()));
    std::vector<double> costs(ordered.size());
    for (std::size_t j = 0; j < ordered.size(); ++j) {
      const std::vector<double> col =
          evaluate(*ordered[j], pilot, opts.pilot_count, report.ledger,
                   ChargeKind::pilot);
      for (std::size_t i = 0; i < opts.pilot_count; ++i)
        matrix.outputs[i][j] = col[i];
      costs[j] = ordered[j]->cost_per_eval();
    }
    used = stats::pilot_stats(matrix, costs);
    report.notes.push_back("stats re-measured from a " +
                           std::to_string(opts.pilot_count) + "-sample pilot");
  }

  allocate::Hierarchy hierarchy{used, plan.hierarchy};
  if (!allocate::check_ordering(hierarchy.stats).empty()) {
    const auto rr = allocate::reorder_models(hierarchy);
    report.notes.push_back("measured stats violated the ordering; hierarchy reordered");
    for (const auto& d : rr.dropped)
      report.notes.push_back("model '" + d + "' dropped after re-measurement");
    hierarchy = rr.hierarchy;
    std::vector<std::shared_ptr<Model>> reordered;
    for (const auto& label : hierarchy.labels) reordered.push_back(by_label.at(label));
    ordered = std::move(reordered);
  }
  report.hierarchy = hierarchy;

  const double residual = budget - report.ledger.spent_training;
  report.allocation = allocate::optimal_allocation(hierarchy, residual);
  report.analytic_mse =
      allocate::analytic_mse(hierarchy, budget, report.ledger.spent_training);

  const SampleBatch batch(rng::derive_seed(seed, rng::kStreamSamples),
                          static_cast<std::size_t>(report.allocation.counts.back()),
                          models.box);
  report.sampling = mfmc_estimate(ordered, report.allocation, batch, report.ledger);
  report.estimate = report.sampling.estimate;
}

}  // namespace

CaMfmcReport run_ca_mfmc(const ModelSet& models, const budget::TrainingPlan& plan,
                         double budget, std::uint64_t seed, const RunOptions& opts) {
  if (!models.high_fi) throw Error("run_ca_mfmc: missing high-fidelity model");
  CaMfmcReport report;
  report.ledger.budget = budget;
  report.ledger.charge_pilot = opts.charge_pilot;
  try {
    run_ca_mfmc_body(models, plan, budget, seed, opts, report);
  } catch (const EvalError& e) {
    report.failed = true;
    report.error = e.what();
    report.failed_sample = e.sample_index;
  }
  return report;
}

}  // namespace camfmc::engine
