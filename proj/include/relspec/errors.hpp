#pragma once

#include <stdexcept>
#include <string>

namespace relspec {

/// Base of every error raised by the library. Each kind maps onto one CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Mismatched grids, dimensions or spaces.
class ShapeError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Argument outside the mathematical domain (t <= 0, nonpositive density, ...).
class DomainError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Two models do not lie in one generalized component (non-decaying difference,
/// exterior disagreement of a padded pair).
class ComponentViolation : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Iteration caps, ill-conditioned fits, failed cross-checks.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A structural hypothesis (spectral gap, matched kernels) fails for the input.
class HypothesisError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class GradingError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class PreconditionError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Configuration parse or model/invariant compatibility problem.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"
                       : what),
        line_(line),
        column_(column) {}
  int exit_code() const noexcept override { return 2; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace relspec
