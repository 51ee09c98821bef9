#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace lpanova {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input: malformed files, invalid flags, mismatched dimensions.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Failures of the numerical machinery rather than of the input format.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Fewer than p+1 distinct weighted covariate values, or an ill-conditioned
/// local design. Usually means the bandwidth is too small at that point.
class SingularDesign : public NumericalError {
 public:
  explicit SingularDesign(const std::string& what,
                          std::optional<std::size_t> grid_index = std::nullopt)
      : NumericalError(what), grid_index_(grid_index) {}
  std::optional<std::size_t> grid_index() const { return grid_index_; }

 private:
  std::optional<std::size_t> grid_index_;
};

/// No observation carries positive kernel weight (f̂ = 0).
class EmptyWindow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Local SST is numerically zero, so the pointwise R² is undefined.
class UndefinedR2 : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, double error_estimate)
      : NumericalError(what + " (error estimate " + std::to_string(error_estimate) + ")"),
        error_estimate_(error_estimate) {}
  double error_estimate() const { return error_estimate_; }

 private:
  double error_estimate_;
};

class AllPointsInfeasible : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonpositiveDenominator : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateDf : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Requested work exceeds a configured memory guard.
class CapacityError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace lpanova
