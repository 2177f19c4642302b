#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "camfmc/engine.hpp"

namespace camfmc::engine {

// A low- or high-fidelity model running as a child process, spoken to over
// line-delimited JSON on its stdin/stdout:
//
//   {"op":"info"}                          -> {"ok":true,"dimension":d,"label":"..."}
//   {"op":"train","n":159,"seed":42}       -> {"ok":true,"train_cost_seconds":...}
//   {"op":"eval","id":7,"inputs":[[...]]}  -> {"ok":true,"id":7,"outputs":[...],
//                                              "cost_seconds":...}
//
// One JSON object per line; responses arrive in request order; any failure is
// {"ok":false,"error":"..."}. Reported cost_seconds are normalized by the
// configured high-fidelity seconds; when a response omits them, wall-clock
// time around the exchange is used instead.
class ExternalModel final : public Model {
 public:
  struct Options {
    std::string label;
    std::string command;            // run via /bin/sh -c
    std::string workdir;            // empty: inherit the parent's
    double high_fi_seconds = 1.0;   // w0 in seconds
    std::size_t chunk = 64;         // samples per eval request
    double assumed_cost = 1.0;      // w prior until something is measured
  };

  explicit ExternalModel(Options opts);
  ~ExternalModel() override;
  ExternalModel(const ExternalModel&) = delete;
  ExternalModel& operator=(const ExternalModel&) = delete;

  // Spawns the child and performs the info handshake.
  void start();
  bool running() const;
  std::size_t dimension() const;
  double train_cost_seconds() const;  // from the last train call, if any

  void train(long long n, std::uint64_t seed);

  const std::string& label() const override;
  double cost_per_eval() const override;  // measured average, or the prior
  std::vector<double> evaluate_batch(const SampleBatch& batch, std::size_t m,
                                     const ChargeSink& charge) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace camfmc::engine
