#include "camfmc/config.hpp"

#include <cmath>
#include <fstream>

#include "camfmc/csv_io.hpp"
#include "camfmc/errors.hpp"
#include "camfmc/external_model.hpp"
#include "camfmc/json_io.hpp"

namespace camfmc::config {

using nlohmann::json;

namespace {

rates::RateModel parse_rate(const json& j, rates::Role expected,
                            const std::string& where) {
  rates::RateModel m = j.get<rates::RateModel>();
  if (m.role != expected)
    throw ConfigError(where + ": rate role mismatch");
  if (const auto v = rates::validate_rate(m)) throw ConfigError(where + ": " + *v);
  return m;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.seed = j.value("seed", std::uint64_t{0});

  if (j.contains("high_fidelity")) {
    const json& h = j.at("high_fidelity");
    const std::string type = h.value("type", "synthetic");
    cfg.high_fi.label = h.value("label", std::string("f0"));
    if (type == "synthetic") {
      cfg.high_fi.kind = HighFiConfig::Kind::synthetic;
      cfg.high_fi.weights = h.at("weights").get<std::vector<double>>();
      if (cfg.high_fi.weights.empty())
        throw ConfigError("high_fidelity.weights must be non-empty");
    } else if (type == "external") {
      cfg.high_fi.kind = HighFiConfig::Kind::external;
      cfg.high_fi.command = h.at("command").get<std::string>();
      cfg.high_fi.workdir = h.value("workdir", std::string());
      cfg.high_fi.chunk = h.value("chunk", std::size_t{64});
    } else {
      throw ConfigError("unknown high_fidelity.type '" + type + "'");
    }
    if (h.contains("variance"))
      cfg.high_fi.variance = h.at("variance").get<double>();
  } else {
    throw ConfigError("config needs a high_fidelity section");
  }

  if (j.contains("input")) {
    const json& in = j.at("input");
    cfg.dimension = in.value("dimension", std::size_t{0});
    if (in.contains("bounds")) {
      for (const auto& b : in.at("bounds")) {
        if (!b.is_array() || b.size() != 2)
          throw ConfigError("input.bounds entries must be [lo, hi] pairs");
        cfg.box.bounds.push_back({b[0].get<double>(), b[1].get<double>()});
      }
      if (cfg.dimension == 0) cfg.dimension = cfg.box.bounds.size();
      if (cfg.box.bounds.size() != cfg.dimension)
        throw ConfigError("input.bounds length disagrees with input.dimension");
    }
  }
  if (cfg.high_fi.kind == HighFiConfig::Kind::synthetic) {
    if (cfg.dimension == 0) cfg.dimension = cfg.high_fi.weights.size();
    if (cfg.dimension != cfg.high_fi.weights.size())
      throw ConfigError("input.dimension disagrees with high_fidelity.weights");
  }
  if (cfg.dimension == 0) throw ConfigError("input.dimension is required");
  if (cfg.box.bounds.empty()) cfg.box = engine::UniformBox::unit(cfg.dimension);
  if (cfg.high_fi.kind == HighFiConfig::Kind::synthetic && !cfg.box.is_unit())
    throw ConfigError("synthetic models require the unit input box");

  cfg.w0_seconds = j.value("high_fidelity_cost_seconds", 1.0);
  if (!(cfg.w0_seconds > 0.0))
    throw ConfigError("high_fidelity_cost_seconds must be positive");
  const std::string units = j.value("budget_units", std::string("normalized"));
  if (units == "seconds")
    cfg.budgets_in_seconds = true;
  else if (units != "normalized")
    throw ConfigError("budget_units must be 'seconds' or 'normalized'");

  if (j.contains("budgets")) {
    cfg.budgets_raw = j.at("budgets").get<std::vector<double>>();
    for (const double p : cfg.budgets_raw) {
      if (!(p > 0.0)) throw ConfigError("budgets must be positive");
      cfg.budgets.push_back(cfg.normalize_budget(p));
    }
  }

  cfg.replicates = j.value("replicates", 100);
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  cfg.pilot_samples = j.value("pilot_samples", std::size_t{100});
  if (cfg.pilot_samples < 2) throw ConfigError("pilot_samples must be >= 2");
  cfg.charge_pilot = j.value("charge_pilot", false);
  const std::string mode = j.value("stats_mode", std::string("measured"));
  if (mode == "measured")
    cfg.stats_mode = engine::RunOptions::StatsMode::measured;
  else if (mode == "predicted")
    cfg.stats_mode = engine::RunOptions::StatsMode::predicted;
  else
    throw ConfigError("stats_mode must be 'measured' or 'predicted'");
  if (j.contains("reference")) cfg.reference = j.at("reference").get<double>();
  if (j.contains("estimators"))
    cfg.estimators = j.at("estimators").get<std::vector<std::string>>();
  for (const auto& e : cfg.estimators)
    if (e != "mc" && e != "mfmc" && e != "camfmc")
      throw ConfigError("unknown estimator '" + e + "'");

  for (const auto& js : j.value("statics", json::array())) {
    StaticConfig s;
    s.label = js.at("label").get<std::string>();
    if (js.contains("stats")) s.stats = js.at("stats").get<stats::ModelStats>();
    if (js.contains("pilot_csv")) {
      s.pilot_csv = js.at("pilot_csv").get<std::string>();
      s.pilot_cost = js.value("cost", 0.0);
      if (!(s.pilot_cost > 0.0))
        throw ConfigError("static '" + s.label + "': pilot_csv needs a positive cost");
    }
    if (!s.stats && s.pilot_csv.empty())
      throw ConfigError("static '" + s.label + "' needs stats or a pilot_csv");
    if (js.contains("model")) s.model = js.at("model");
    cfg.statics.push_back(std::move(s));
  }

  for (const auto& jt : j.value("trainables", json::array())) {
    TrainableConfig t;
    t.spec.label = jt.at("label").get<std::string>();
    t.spec.accuracy = parse_rate(jt.at("accuracy"), rates::Role::accuracy,
                                 "trainable '" + t.spec.label + "' accuracy");
    t.spec.cost = parse_rate(jt.at("cost"), rates::Role::cost,
                             "trainable '" + t.spec.label + "' cost");
    t.spec.min_train = jt.value("min_train", 1LL);
    if (jt.contains("feasible_sizes"))
      t.spec.feasible_sizes = jt.at("feasible_sizes").get<std::vector<long long>>();
    if (jt.contains("model")) t.model = jt.at("model");
    cfg.trainables.push_back(std::move(t));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

stats::ModelStats resolve_static_stats(const StaticConfig& s) {
  if (s.stats) return *s.stats;
  const stats::PilotMatrix matrix = io::read_pilot_matrix(s.pilot_csv);
  if (matrix.model_count != 2)
    throw ConfigError("static '" + s.label +
                      "': pilot CSV must hold exactly f_0 and f_1 columns");
  const double costs[2] = {1.0, s.pilot_cost};
  return stats::pilot_stats(matrix, costs)[1];
}

stats::ModelStats high_fi_stats(const ExperimentConfig& cfg) {
  stats::ModelStats hi;
  hi.cost = 1.0;
  hi.correlation = 1.0;
  if (cfg.high_fi.kind == HighFiConfig::Kind::synthetic) {
    double s2 = 0.0;
    for (const double a : cfg.high_fi.weights) s2 += a * a;
    hi.stddev = std::sqrt(s2 / 12.0);
    if (cfg.high_fi.variance) hi.stddev = std::sqrt(*cfg.high_fi.variance);
  } else {
    if (!cfg.high_fi.variance)
      throw ConfigError("external high-fidelity model needs a configured variance");
    hi.stddev = std::sqrt(*cfg.high_fi.variance);
  }
  return hi;
}

std::vector<allocate::Candidate> build_candidates(const ExperimentConfig& cfg) {
  std::vector<allocate::Candidate> out;
  for (const auto& s : cfg.statics)
    out.push_back({s.label, resolve_static_stats(s)});
  for (const auto& t : cfg.trainables) out.push_back({t.spec.label, t.spec});
  return out;
}

namespace {

std::shared_ptr<engine::ExternalModel> make_external(
    const std::string& label, const json& spec, double w0_seconds,
    double assumed_cost) {
  engine::ExternalModel::Options opts;
  opts.label = label;
  opts.command = spec.at("command").get<std::string>();
  opts.workdir = spec.value("workdir", std::string());
  opts.high_fi_seconds = w0_seconds;
  opts.chunk = spec.value("chunk", std::size_t{64});
  opts.assumed_cost = assumed_cost;
  return std::make_shared<engine::ExternalModel>(std::move(opts));
}

}  // namespace

engine::ModelSet build_model_set(const ExperimentConfig& cfg) {
  engine::ModelSet set;
  set.box = cfg.box;

  std::shared_ptr<engine::SyntheticHighFidelity> synthetic_hi;
  if (cfg.high_fi.kind == HighFiConfig::Kind::synthetic) {
    synthetic_hi = std::make_shared<engine::SyntheticHighFidelity>(
        cfg.high_fi.weights, cfg.high_fi.label);
    set.high_fi = synthetic_hi;
    set.exact_mean = synthetic_hi->exact_mean();
    set.exact_variance = synthetic_hi->exact_variance();
  } else {
    auto ext = make_external(cfg.high_fi.label,
                             json{{"command", cfg.high_fi.command},
                                  {"workdir", cfg.high_fi.workdir},
                                  {"chunk", cfg.high_fi.chunk}},
                             cfg.w0_seconds, 1.0);
    ext->start();
    if (ext->dimension() != 0 && ext->dimension() != cfg.dimension)
      throw ConfigError("external high-fidelity model reports dimension " +
                        std::to_string(ext->dimension()) + ", config says " +
                        std::to_string(cfg.dimension));
    set.high_fi = std::move(ext);
    if (cfg.high_fi.variance) set.exact_variance = *cfg.high_fi.variance;
  }

  for (const auto& s : cfg.statics) {
    const stats::ModelStats st = resolve_static_stats(s);
    if (s.model.empty())
      throw ConfigError("static '" + s.label + "' has no executable model");
    const std::string type = s.model.value("type", std::string());
    std::shared_ptr<engine::Model> model;
    if (type == "synthetic_correlated") {
      if (!synthetic_hi)
        throw ConfigError("synthetic statics need a synthetic high-fidelity model");
      model = engine::synthetic_correlated(synthetic_hi,
                                           s.model.at("rho").get<double>(),
                                           s.model.at("cost").get<double>(), s.label);
    } else if (type == "external") {
      auto ext = make_external(s.label, s.model, cfg.w0_seconds, st.cost);
      ext->start();
      model = std::move(ext);
    } else {
      throw ConfigError("static '" + s.label + "': unknown model type '" + type + "'");
    }
    set.statics.push_back({std::move(model), st});
  }

  for (const auto& t : cfg.trainables) {
    if (t.model.empty())
      throw ConfigError("trainable '" + t.spec.label + "' has no executable model");
    const std::string type = t.model.value("type", std::string());
    engine::TrainableModel tm;
    tm.spec = t.spec;
    if (type == "synthetic") {
      if (!synthetic_hi)
        throw ConfigError("synthetic trainables need a synthetic high-fidelity model");
      const auto spec = t.spec;
      auto base = synthetic_hi;
      tm.train = [base, spec](long long n, std::uint64_t) {
        return engine::synthetic_lowfi_train(base, spec.accuracy, spec.cost, n,
                                             spec.label);
      };
    } else if (type == "external") {
      auto ext = make_external(t.spec.label, t.model, cfg.w0_seconds,
                               rates::eval_rate(t.spec.cost, 1.0));
      tm.train = [ext](long long n, std::uint64_t seed) {
        if (!ext->running()) ext->start();
        ext->train(n, seed);
        return ext;
      };
    } else {
      throw ConfigError("trainable '" + t.spec.label + "': unknown model type '" +
                        type + "'");
    }
    set.trainables.push_back(std::move(tm));
  }
  return set;
}

}  // namespace camfmc::config
