#pragma once

#include <stdexcept>
#include <string>

namespace demix {

// Thrown for malformed inputs: bad dimensions, invalid radii, unknown config
// keys. The CLI maps these to the usage exit code.
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

// A cone variant an operation does not handle.
class UnsupportedConeError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

// Numerical failures. The CLI maps these to a distinct exit code.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankError : public NumericalError {
 public:
  RankError(const std::string& what, int numerical_rank)
      : NumericalError(what + " (numerical rank " + std::to_string(numerical_rank) + ")"),
        numerical_rank_(numerical_rank) {}
  int numerical_rank() const { return numerical_rank_; }

 private:
  int numerical_rank_;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, long iterations, double residual)
      : NumericalError(what + " after " + std::to_string(iterations) +
                       " iterations, residual " + std::to_string(residual)),
        iterations_(iterations),
        residual_(residual) {}
  long iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  long iterations_;
  double residual_;
};

}  // namespace demix
