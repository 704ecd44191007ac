#ifndef SOSEKF_ERRORS_HPP
#define SOSEKF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sosekf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape disagreement between operands.
struct DimensionError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required, or a run aborted
// because an update produced NaN/inf (the message carries the step index).
struct NumericError : Error {
  using Error::Error;
};

// A definiteness factorization hit a non-positive pivot.
struct NotSpdError : Error {
  using Error::Error;
};

// Iterative solver stopped without meeting its gradient tolerance.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double grad_norm)
      : Error(what), grad_norm(grad_norm) {}
  double grad_norm;
};

struct ConfigError : Error {
  using Error::Error;
};

// Malformed external input (CSV rows, JSON documents).
struct ParseError : Error {
  using Error::Error;
};

struct InsufficientDataError : Error {
  using Error::Error;
};

// No integer k satisfies 1 < k*a < 2 for the given decay constant a.
struct InfeasibleConstantError : Error {
  InfeasibleConstantError(const std::string& what, double a)
      : Error(what), a(a) {}
  double a;
};

}  // namespace sosekf

#endif  // SOSEKF_ERRORS_HPP
