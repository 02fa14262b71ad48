#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace umesh {

/// Matrix or vector dimensions do not match what an operation requires.
class InvalidDimension : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A parameter vector does not match the owning device, or a config value is
/// out of its documented range.
class InvalidParameter : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A domain-type invariant (unitarity, kernel invertibility, ...) failed.
class InvariantViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value produced during optimization. Carries the offending
/// iterate so callers can reproduce the failure.
class NumericFailure : public std::runtime_error {
public:
  NumericFailure(const std::string& what, Eigen::VectorXd iterate, long iteration)
      : std::runtime_error(what), iterate(std::move(iterate)), iteration(iteration) {}
  explicit NumericFailure(const std::string& what)
      : std::runtime_error(what), iteration(-1) {}

  Eigen::VectorXd iterate;
  long iteration;
};

}  // namespace umesh
