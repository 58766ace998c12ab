#pragma once

#include <stdexcept>
#include <string>

namespace ofmpc {

// Errors are exceptions so that solver failures carry diagnostics up to the
// closed-loop driver, which annotates them with step index and component.

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedFamilyError : std::runtime_error {
  explicit UnsupportedFamilyError(const std::string& msg)
      : std::runtime_error(msg) {}
};

struct FilterDivergenceError : std::runtime_error {
  explicit FilterDivergenceError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Reference generator could not reach the requested constraint residual.
struct InfeasibleReferenceError : std::runtime_error {
  InfeasibleReferenceError(const std::string& msg, double residual)
      : std::runtime_error(msg), best_residual(residual) {}
  double best_residual;
};

struct NoSteadyStateError : std::runtime_error {
  NoSteadyStateError(const std::string& msg, double residual)
      : std::runtime_error(msg), best_residual(residual) {}
  double best_residual;
};

// NMPC failed to converge; carries the best KKT residual seen.
struct SolverFailureError : std::runtime_error {
  SolverFailureError(const std::string& msg, double residual, int iterations)
      : std::runtime_error(msg), kkt_residual(residual), iterations(iterations) {}
  double kkt_residual;
  int iterations;
};

struct InfeasibleProblemError : std::runtime_error {
  explicit InfeasibleProblemError(const std::string& msg)
      : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyLogError : std::runtime_error {
  explicit EmptyLogError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ofmpc
