#pragma once

#include <stdexcept>
#include <string>

namespace isocost {

// Bad arguments, malformed configs or files. CLI maps this to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical operation produced something unusable (non-finite values,
// singular transforms, runaway integration). CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelEvaluationError : NumericalError {
  using NumericalError::NumericalError;
};

struct IntegrationError : NumericalError {
  using NumericalError::NumericalError;
};

struct SingularityError : NumericalError {
  using NumericalError::NumericalError;
};

// An agent or solver cannot make progress (cost rate below floor, no valid
// backward step, step budget exhausted mid-front).
struct StallError : NumericalError {
  using NumericalError::NumericalError;
};

struct InstabilityError : NumericalError {
  using NumericalError::NumericalError;
};

struct DegenerateFrontError : NumericalError {
  using NumericalError::NumericalError;
};

struct GeometryError : NumericalError {
  using NumericalError::NumericalError;
};

struct SearchError : NumericalError {
  using NumericalError::NumericalError;
};

// An iterative solve hit its iteration cap before meeting its tolerance.
// CLI maps this to exit code 4.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace isocost
