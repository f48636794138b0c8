#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace acll {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Structurally invalid specification of a component (bad dims, bad params).
struct InvalidSpecError : Error {
  using Error::Error;
};

/// Tensor/mask dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

/// Empty or malformed dataset input.
struct InvalidDataError : Error {
  using Error::Error;
};

/// Task id outside the registered range.
struct InvalidTaskError : Error {
  using Error::Error;
};

/// Operation applied to a task out of sequence order.
struct SequencingError : Error {
  using Error::Error;
};

/// Attempt to claim a weight already owned by another task.
struct OwnershipViolationError : Error {
  using Error::Error;
};

/// Kernel matrix not positive definite after maximum jitter.
struct ConditioningError : Error {
  using Error::Error;
};

/// Negative Lagrange multiplier.
struct InvalidMultiplierError : Error {
  using Error::Error;
};

/// Operation on a state that cannot support it (e.g. empty cache).
struct InvalidStateError : Error {
  using Error::Error;
};

/// A candidate evaluation failed; carries the offending point.
struct EvaluationError : Error {
  std::vector<double> theta;
  EvaluationError(std::vector<double> theta_, const std::string& what_)
      : Error(what_), theta(std::move(theta_)) {}
};

}  // namespace acll
