#pragma once

#include <stdexcept>
#include <string>

namespace robustcf {

/// Inputs violate an operation's contract (dimension mismatch, bad range).
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// An engine or evaluator cannot represent the requested computation.
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

/// A moment/objective evaluation produced non-finite values that could not be
/// rescaled away.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Estimation or fixed-point iteration failed to converge.
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

/// A matrix required to be invertible/PD is numerically singular.
class SingularityError : public std::runtime_error {
 public:
  explicit SingularityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace robustcf
