#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace camfmc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rate regression failed (too few points, bad values, wrong-sign slope).
class FitError : public Error {
 public:
  using Error::Error;
};

// Budget cannot accommodate the requested operation.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// Degenerate statistics (e.g. a perfectly correlated control variate).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Child-process wire protocol violation.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Model evaluation failed; carries the index of the first affected sample.
class EvalError : public Error {
 public:
  EvalError(const std::string& msg, std::size_t sample_index)
      : Error(msg), sample_index(sample_index) {}
  std::size_t sample_index = 0;
};

}  // namespace camfmc
