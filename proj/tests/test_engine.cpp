#include <doctest.h>

#include <cmath>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "camfmc/engine.hpp"
#include "camfmc/errors.hpp"
#include "camfmc/rng.hpp"
#include "camfmc/stats.hpp"

using namespace camfmc;
using engine::SampleBatch;
using engine::UniformBox;

namespace {

std::shared_ptr<engine::SyntheticHighFidelity> test_high_fi() {
  return std::make_shared<engine::SyntheticHighFidelity>(
      std::vector<double>{1.0, 0.8, 0.6, 0.4});
}

engine::ModelSet one_trainable_set() {
  engine::ModelSet set;
  auto hi = test_high_fi();
  set.high_fi = hi;
  set.exact_mean = hi->exact_mean();
  set.exact_variance = hi->exact_variance();
  set.box = UniformBox::unit(4);
  budget::TrainableSpec spec{
      "surrogate",
      {rates::Family::algebraic, rates::Role::accuracy, 0.5, 1.0},
      {rates::Family::algebraic, rates::Role::cost, 1e-4, 1.0},
      1,
      {}};
  set.trainables.push_back(
      {spec, [hi, spec](long long n, std::uint64_t) {
         return engine::synthetic_lowfi_train(hi, spec.accuracy, spec.cost, n,
                                              spec.label);
       }});
  return set;
}

}  // namespace

TEST_CASE("draw_samples: determinism, prefix property, bounds") {
  const UniformBox box = UniformBox::unit(3);
  const SampleBatch a(42, 10, box);
  const SampleBatch b(42, 10, box);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t c = 0; c < 3; ++c) CHECK(a.input(i)[c] == b.input(i)[c]);

  const SampleBatch longer(42, 20, box);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t c = 0; c < 3; ++c) CHECK(a.input(i)[c] == longer.input(i)[c]);

  // Twelve-dimensional physics-style bounds: every coordinate stays inside.
  UniformBox aug;
  aug.bounds = {{0.4889e-3, 0.5975e-3}, {0.6412e-2, 0.8676e-2}, {1.1563, 1.9272},
                {2.0966, 3.4943},       {0.6142, 0.6788},       {4.0403, 6.7338},
                {1.2800, 1.9200},       {2.1708, 2.3993},       {1.9927, 2.4356},
                {1.2815, 1.4165},       {0.2081, 0.2544},       {0.0528, 0.0583}};
  const SampleBatch phys(7, 200, aug);
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t c = 0; c < 12; ++c) {
      CHECK(phys.input(i)[c] >= aug.bounds[c].lo);
      CHECK(phys.input(i)[c] < aug.bounds[c].hi);
    }

  UniformBox bad;
  bad.bounds = {{1.0, 1.0}};
  CHECK_THROWS_AS(SampleBatch(1, 5, bad), Error);
}

TEST_CASE("synthetic high-fidelity closed forms") {
  engine::SyntheticHighFidelity f0(std::vector<double>{1.0, 1.0, 1.0, 1.0});
  CHECK(f0.exact_mean() == doctest::Approx(2.0));
  CHECK(f0.exact_variance() == doctest::Approx(4.0 / 12.0));

  engine::SyntheticHighFidelity degenerate(std::vector<double>{0.0, 0.0});
  CHECK(degenerate.exact_variance() == 0.0);  // rejected downstream

  // CLT check over 1e6 samples.
  auto hi = test_high_fi();
  engine::BudgetLedger ledger;
  ledger.budget = 2e6;
  const double est = engine::mc_estimate(*hi, 1000000, 123, UniformBox::unit(4), ledger);
  const double se = std::sqrt(hi->exact_variance() / 1e6);
  CHECK(std::abs(est - hi->exact_mean()) < 4.0 * se);
}

TEST_CASE("synthetic_lowfi_train realizes the accuracy bound exactly") {
  auto hi = test_high_fi();
  const rates::RateModel acc{rates::Family::algebraic, rates::Role::accuracy, 0.5, 1.0};
  const rates::RateModel cost{rates::Family::algebraic, rates::Role::cost, 1e-4, 1.0};

  SUBCASE("q = 0.5 gives tau^2 = sigma0^2 and rho^2 = 0.5") {
    auto lo = engine::synthetic_lowfi_train(hi, acc, cost, 1, "lo");
    CHECK(lo->tau() * lo->tau() == doctest::Approx(hi->exact_variance()).epsilon(1e-14));
    CHECK(lo->exact_correlation() * lo->exact_correlation() ==
          doctest::Approx(0.5).epsilon(1e-14));
    CHECK(lo->cost_per_eval() == doctest::Approx(1e-4));
  }

  SUBCASE("uninformative bound is rejected") {
    const rates::RateModel too_weak{rates::Family::algebraic, rates::Role::accuracy,
                                    2.0, 0.1};
    CHECK_THROWS_AS(engine::synthetic_lowfi_train(hi, too_weak, cost, 1, "lo"), Error);
  }

  SUBCASE("sample correlation matches the closed form") {
    auto lo = engine::synthetic_lowfi_train(hi, acc, cost, 50, "lo");
    const double rho = lo->exact_correlation();
    const std::size_t n = 100000;
    const SampleBatch batch(9, n, UniformBox::unit(4));
    engine::BudgetLedger ledger;
    ledger.budget = 1e9;
    const auto y0 = engine::evaluate(*hi, batch, n, ledger);
    const auto y1 = engine::evaluate(*lo, batch, n, ledger);
    const double r = stats::pearson(y0, y1);
    const double band = 3.0 / std::sqrt(static_cast<double>(n - 3));
    CHECK(std::abs(std::atanh(r) - std::atanh(rho)) < band);
  }
}

TEST_CASE("evaluate: ledger arithmetic and refusal") {
  auto hi = test_high_fi();
  auto lo = engine::synthetic_correlated(hi, 0.99, 0.01, "f1");
  const SampleBatch batch(3, 100, UniformBox::unit(4));

  engine::BudgetLedger ledger;
  ledger.budget = 10.0;

  SUBCASE("m = 0: empty output, no charge") {
    const auto out = engine::evaluate(*hi, batch, 0, ledger);
    CHECK(out.empty());
    CHECK(ledger.spent_sampling == 0.0);
    CHECK(ledger.eval_counts.empty());
  }

  SUBCASE("charge is exactly m * w") {
    engine::evaluate(*lo, batch, 5, ledger);
    CHECK(ledger.spent_sampling == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(ledger.eval_counts.at("f1") == 5);
    engine::evaluate(*hi, batch, 3, ledger);
    CHECK(ledger.spent_sampling == doctest::Approx(3.05).epsilon(1e-15));
  }

  SUBCASE("refusal happens before evaluation") {
    CHECK_THROWS_AS(engine::evaluate(*hi, batch, 11, ledger), BudgetError);
    CHECK(ledger.spent_sampling == 0.0);
    CHECK(ledger.eval_counts.empty());
  }

  SUBCASE("pilot evaluations are recorded but exempt by default") {
    engine::evaluate(*hi, batch, 9, ledger, engine::ChargeKind::pilot);
    CHECK(ledger.spent_pilot == 9.0);
    CHECK(ledger.available() == 10.0);
    CHECK(ledger.eval_counts.at("f0") == 9);
  }
}

namespace {

// Wrapper that records which inputs a model consumed.
class RecordingModel final : public engine::Model {
 public:
  explicit RecordingModel(std::shared_ptr<engine::Model> inner)
      : inner_(std::move(inner)) {}
  const std::string& label() const override { return inner_->label(); }
  double cost_per_eval() const override { return inner_->cost_per_eval(); }
  std::vector<double> evaluate_batch(const SampleBatch& batch, std::size_t m,
                                     const engine::ChargeSink& charge) override {
    seen.clear();
    for (std::size_t i = 0; i < m; ++i)
      seen.insert(seen.end(), batch.input(i).begin(), batch.input(i).end());
    return inner_->evaluate_batch(batch, m, charge);
  }
  std::vector<double> seen;

 private:
  std::shared_ptr<engine::Model> inner_;
};

}  // namespace

TEST_CASE("mfmc_estimate: shared-sample coupling and special cases") {
  auto hi = test_high_fi();
  auto lo = engine::synthetic_correlated(hi, 0.99, 0.01, "f1");

  allocate::Hierarchy h;
  h.stats = {{1.0, 1.0, std::sqrt(hi->exact_variance())},
             {0.01, 0.99, std::sqrt(lo->exact_variance())}};
  h.labels = {"f0", "f1"};
  const double p = 200.0;
  const auto alloc = allocate::optimal_allocation(h, p);
  const SampleBatch batch(17, static_cast<std::size_t>(alloc.counts.back()),
                          UniformBox::unit(4));

  SUBCASE("model j consumes exactly the first m_j shared inputs") {
    auto rec_hi = std::make_shared<RecordingModel>(hi);
    auto rec_lo = std::make_shared<RecordingModel>(lo);
    engine::BudgetLedger ledger;
    ledger.budget = p;
    const std::vector<std::shared_ptr<engine::Model>> models{rec_hi, rec_lo};
    engine::mfmc_estimate(models, alloc, batch, ledger);
    const auto m0 = static_cast<std::size_t>(alloc.counts[0]);
    const auto m1 = static_cast<std::size_t>(alloc.counts[1]);
    REQUIRE(rec_hi->seen.size() == m0 * 4);
    REQUIRE(rec_lo->seen.size() == m1 * 4);
    for (std::size_t i = 0; i < rec_hi->seen.size(); ++i)
      CHECK(rec_hi->seen[i] == rec_lo->seen[i]);

    // Ledger exactness: spent = sum m_j w_j, counts match issued evaluations.
    CHECK(ledger.spent_sampling ==
          doctest::Approx(static_cast<double>(m0) + 0.01 * static_cast<double>(m1))
              .epsilon(1e-15));
    CHECK(ledger.eval_counts.at("f0") == alloc.counts[0]);
    CHECK(ledger.eval_counts.at("f1") == alloc.counts[1]);
  }

  SUBCASE("k = 0 reduces to the plain MC estimate") {
    allocate::Hierarchy mc;
    mc.stats = {{1.0, 1.0, 1.0}};
    mc.labels = {"f0"};
    const auto a0 = allocate::optimal_allocation(mc, 50.0);
    engine::BudgetLedger l1, l2;
    l1.budget = l2.budget = 50.0;
    const SampleBatch b(5, 50, UniformBox::unit(4));
    const std::vector<std::shared_ptr<engine::Model>> models{hi};
    const auto rep = engine::mfmc_estimate(models, a0, b, l1);
    const double mc_est = engine::mc_estimate(*hi, 50, b, l2);
    CHECK(rep.estimate == mc_est);
  }

  SUBCASE("zero coefficients reduce to the high-fidelity mean over m_0") {
    allocate::Allocation zeroed = alloc;
    zeroed.coefficients[0] = 0.0;
    engine::BudgetLedger ledger;
    ledger.budget = p;
    const std::vector<std::shared_ptr<engine::Model>> models{hi, lo};
    const auto rep = engine::mfmc_estimate(models, zeroed, batch, ledger);
    engine::BudgetLedger l2;
    l2.budget = p;
    const double mc_est =
        engine::mc_estimate(*hi, static_cast<std::size_t>(alloc.counts[0]), batch, l2);
    CHECK(rep.estimate == doctest::Approx(mc_est).epsilon(1e-15));
  }
}

TEST_CASE("estimates are bit-identical across thread counts") {
#ifdef _OPENMP
  auto hi = test_high_fi();
  auto lo = engine::synthetic_correlated(hi, 0.99, 0.01, "f1");
  allocate::Hierarchy h;
  h.stats = {{1.0, 1.0, std::sqrt(hi->exact_variance())},
             {0.01, 0.99, std::sqrt(lo->exact_variance())}};
  h.labels = {"f0", "f1"};
  const auto alloc = allocate::optimal_allocation(h, 500.0);
  const std::vector<std::shared_ptr<engine::Model>> models{hi, lo};

  auto run = [&]() {
    engine::BudgetLedger ledger;
    ledger.budget = 500.0;
    const SampleBatch batch(21, static_cast<std::size_t>(alloc.counts.back()),
                            UniformBox::unit(4));
    return engine::mfmc_estimate(models, alloc, batch, ledger).estimate;
  };
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double serial = run();
  omp_set_num_threads(saved);
  const double parallel = run();
  CHECK(serial == parallel);
#endif
}

TEST_CASE("mfmc variance reduction on the rho=0.99, w=0.01 configuration") {
  auto hi = test_high_fi();
  auto lo = engine::synthetic_correlated(hi, 0.99, 0.01, "f1");
  allocate::Hierarchy h;
  h.stats = {{1.0, 1.0, std::sqrt(hi->exact_variance())},
             {0.01, 0.99, std::sqrt(lo->exact_variance())}};
  h.labels = {"f0", "f1"};
  const double p = 2000.0;
  const auto alloc = allocate::optimal_allocation(h, p);
  const std::vector<std::shared_ptr<engine::Model>> models{hi, lo};

  const int reps = 100;
  std::vector<double> mfmc_est, mc_est;
  for (int r = 0; r < reps; ++r) {
    const std::uint64_t seed = rng::derive_seed(777, static_cast<std::uint64_t>(r));
    engine::BudgetLedger l1;
    l1.budget = p;
    const SampleBatch batch(seed, static_cast<std::size_t>(alloc.counts.back()),
                            UniformBox::unit(4));
    mfmc_est.push_back(engine::mfmc_estimate(models, alloc, batch, l1).estimate);
    engine::BudgetLedger l2;
    l2.budget = p;
    mc_est.push_back(engine::mc_estimate(*hi, static_cast<std::size_t>(p), seed,
                                         UniformBox::unit(4), l2));
  }
  const double mu0 = hi->exact_mean();
  const double mse_mfmc = stats::replicate_mse(mfmc_est, mu0);
  const double mse_mc = stats::replicate_mse(mc_est, mu0);
  // Analytic ratio is about 17; demand at least 5 with replicate noise.
  CHECK(mse_mfmc * 5.0 <= mse_mc);
  // Telescoping consistency: beats plain MC restricted to m_0 samples too.
  const double mc_at_m0 = hi->exact_variance() / static_cast<double>(alloc.counts[0]);
  CHECK(mse_mfmc < mc_at_m0);
}

TEST_CASE("run_ca_mfmc end to end on the synthetic pipeline") {
  engine::ModelSet set = one_trainable_set();
  const budget::LabeledStats hi_stats{
      "f0", {1.0, 1.0, std::sqrt(*set.exact_variance)}};
  const double p = 5000.0;
  const auto plan =
      budget::build_hierarchy(hi_stats, {}, {&set.trainables[0].spec, 1}, p);
  REQUIRE(plan.steps.size() == 1);

  engine::RunOptions opts;
  opts.stats_mode = engine::RunOptions::StatsMode::predicted;

  SUBCASE("deterministic reruns") {
    const auto a = engine::run_ca_mfmc(set, plan, p, 99, opts);
    const auto b = engine::run_ca_mfmc(set, plan, p, 99, opts);
    REQUIRE(!a.failed);
    CHECK(a.estimate == b.estimate);
    CHECK(a.ledger.spent_training ==
          doctest::Approx(static_cast<double>(plan.steps[0].n_feasible)));
    // Ledger exactness against the allocation.
    double expected = 0.0;
    for (std::size_t j = 0; j < a.allocation.counts.size(); ++j)
      expected += static_cast<double>(a.allocation.counts[j]) *
                  a.hierarchy.stats[j].cost;
    CHECK(a.ledger.spent_sampling == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("measured mode re-estimates stats from a pilot") {
    engine::RunOptions measured;
    measured.stats_mode = engine::RunOptions::StatsMode::measured;
    measured.pilot_count = 200;
    const auto rep = engine::run_ca_mfmc(set, plan, p, 7, measured);
    REQUIRE(!rep.failed);
    CHECK(rep.ledger.spent_pilot > 0.0);
    CHECK(std::abs(rep.hierarchy.stats[1].correlation) < 1.0);
    // The measured correlation should be near the exact rho of the trained
    // surrogate.
    const double q = rates::eval_rate(set.trainables[0].spec.accuracy,
                                      static_cast<double>(plan.steps[0].n_feasible));
    const double rho = std::sqrt(1.0 - q);
    CHECK(std::abs(std::atanh(rep.hierarchy.stats[1].correlation) - std::atanh(rho)) <
          4.0 / std::sqrt(200.0 - 3.0));
  }

  SUBCASE("unbiasedness over replicates") {
    const int reps = 100;
    std::vector<double> estimates;
    for (int r = 0; r < reps; ++r) {
      const auto rep = engine::run_ca_mfmc(
          set, plan, p, rng::derive_seed(5, static_cast<std::uint64_t>(r)), opts);
      REQUIRE(!rep.failed);
      estimates.push_back(rep.estimate);
    }
    const double mean = stats::sample_mean(estimates);
    const double sd = stats::sample_stddev(estimates);
    CHECK(std::abs(mean - *set.exact_mean) <=
          4.0 * sd / std::sqrt(static_cast<double>(reps)));
  }
}

TEST_CASE("run_ca_mfmc with zero trainables reduces to the static estimator") {
  engine::ModelSet set;
  auto hi = test_high_fi();
  set.high_fi = hi;
  set.exact_mean = hi->exact_mean();
  set.exact_variance = hi->exact_variance();
  set.box = UniformBox::unit(4);
  auto lo = engine::synthetic_correlated(hi, 0.99, 0.01, "f1");
  set.statics.push_back(
      {lo, {0.01, 0.99, std::sqrt(lo->exact_variance())}});

  const budget::LabeledStats hi_stats{"f0", {1.0, 1.0, std::sqrt(hi->exact_variance())}};
  const std::vector<budget::LabeledStats> statics{
      {"f1", {0.01, 0.99, std::sqrt(lo->exact_variance())}}};
  const double p = 300.0;
  const auto plan = budget::build_hierarchy(hi_stats, statics, {}, p);

  engine::RunOptions opts;
  opts.stats_mode = engine::RunOptions::StatsMode::predicted;
  const auto rep = engine::run_ca_mfmc(set, plan, p, 11, opts);
  REQUIRE(!rep.failed);
  CHECK(rep.ledger.spent_training == 0.0);

  const auto alloc = allocate::optimal_allocation(
      allocate::Hierarchy{plan.predicted, plan.hierarchy}, p);
  engine::BudgetLedger ledger;
  ledger.budget = p;
  const SampleBatch batch(rng::derive_seed(11, rng::kStreamSamples),
                          static_cast<std::size_t>(alloc.counts.back()),
                          UniformBox::unit(4));
  const std::vector<std::shared_ptr<engine::Model>> models{hi, lo};
  const auto direct = engine::mfmc_estimate(models, alloc, batch, ledger);
  CHECK(rep.estimate == direct.estimate);
}

TEST_CASE("two-trainable synthetic pipeline: unbiased and far below MC") {
  engine::ModelSet set;
  auto hi = test_high_fi();
  set.high_fi = hi;
  set.exact_mean = hi->exact_mean();
  set.exact_variance = hi->exact_variance();
  set.box = UniformBox::unit(4);
  // First surrogate: rho(n*) >= 0.995 at its optimum; second one cheaper and
  // weaker.
  budget::TrainableSpec first{
      "sur1",
      {rates::Family::algebraic, rates::Role::accuracy, 0.5, 1.0},
      {rates::Family::algebraic, rates::Role::cost, 1e-4, 1.0},
      1,
      {}};
  budget::TrainableSpec second{
      "sur2",
      {rates::Family::algebraic, rates::Role::accuracy, 0.9, 0.6},
      {rates::Family::algebraic, rates::Role::cost, 1e-5, 1.2},
      1,
      {}};
  for (const auto& spec : {first, second})
    set.trainables.push_back({spec, [hi, spec](long long n, std::uint64_t) {
                                return engine::synthetic_lowfi_train(
                                    hi, spec.accuracy, spec.cost, n, spec.label);
                              }});

  const budget::LabeledStats hi_stats{"f0", {1.0, 1.0, std::sqrt(*set.exact_variance)}};
  const std::vector<budget::TrainableSpec> specs{first, second};
  const double p = 5000.0;
  const auto plan = budget::build_hierarchy(hi_stats, {}, specs, p);
  REQUIRE(plan.steps.size() == 2);
  const double q1 = rates::eval_rate(first.accuracy,
                                     static_cast<double>(plan.steps[0].n_feasible));
  CHECK(std::sqrt(1.0 - q1) >= 0.995);

  engine::RunOptions opts;
  opts.stats_mode = engine::RunOptions::StatsMode::predicted;
  const int reps = 200;
  std::vector<double> ca(reps), mc(reps);
  for (int r = 0; r < reps; ++r) {
    const std::uint64_t seed = rng::derive_seed(4242, static_cast<std::uint64_t>(r));
    const auto rep = engine::run_ca_mfmc(set, plan, p, seed, opts);
    REQUIRE(!rep.failed);
    ca[static_cast<std::size_t>(r)] = rep.estimate;
    engine::BudgetLedger ledger;
    ledger.budget = p;
    mc[static_cast<std::size_t>(r)] = engine::mc_estimate(
        *hi, static_cast<std::size_t>(p), rng::derive_seed(seed, rng::kStreamSamples),
        set.box, ledger);
  }
  // Unbiasedness: mean of the replicates within 4 standard errors of mu0.
  const double mean = stats::sample_mean(ca);
  const double sd = stats::sample_stddev(ca);
  CHECK(std::abs(mean - *set.exact_mean) <=
        4.0 * sd / std::sqrt(static_cast<double>(reps)));
  // At least 10x below plain MC at equal total budget.
  const double mse_ca = stats::replicate_mse(ca, *set.exact_mean);
  const double mse_mc = stats::replicate_mse(mc, *set.exact_mean);
  CHECK(mse_ca * 10.0 <= mse_mc);
}
