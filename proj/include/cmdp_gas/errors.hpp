#pragma once

#include <stdexcept>
#include <string>

#include "cmdp_gas/trace.hpp"

namespace cmdp {

/// Violated function precondition (negative multiplier, unconverged input, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for solver failures. `kind()` is the stable error-class name the CLI
/// prints on the diagnostic stream.
class SolverError : public std::runtime_error {
 public:
  SolverError(std::string kind, const std::string& what, SolveTrace trace = {})
      : std::runtime_error(what), kind_(std::move(kind)), trace_(std::move(trace)) {}

  const std::string& kind() const noexcept { return kind_; }
  const SolveTrace& trace() const noexcept { return trace_; }

 private:
  std::string kind_;
  SolveTrace trace_;
};

/// Gradient at the upper multiplier bound is still negative.
class InfeasibleError : public SolverError {
 public:
  InfeasibleError(const std::string& what, SolveTrace trace)
      : SolverError("infeasible-or-M-too-small", what, std::move(trace)) {}
};

/// The outer search stopped making progress without meeting its tolerance.
class StagnationError : public SolverError {
 public:
  StagnationError(const std::string& what, SolveTrace trace)
      : SolverError("stagnation", what, std::move(trace)) {}
};

/// Primal-dual iterate left every sensible range.
class DivergenceError : public SolverError {
 public:
  DivergenceError(const std::string& what, SolveTrace trace)
      : SolverError("divergence", what, std::move(trace)) {}
};

/// Tangent intersection fell outside its bracket, i.e. the sampled dual is not
/// convex. Carries both bracket endpoints as (mu, objective, gradient).
class ConvexityError : public SolverError {
 public:
  struct Point {
    double mu, objective, gradient;
  };

  ConvexityError(const std::string& what, Point lo, Point hi)
      : SolverError("convexity-violation", what), lo_(lo), hi_(hi) {}

  Point lo() const noexcept { return lo_; }
  Point hi() const noexcept { return hi_; }

 private:
  Point lo_, hi_;
};

/// Unreadable or malformed input files, invalid configurations, write failures.
class ConfigError : public SolverError {
 public:
  explicit ConfigError(const std::string& what) : SolverError("io-config", what) {}
};

}  // namespace cmdp
