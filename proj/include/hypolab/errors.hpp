#pragma once

#include <stdexcept>
#include <string>

namespace hypolab {

// Error taxonomy shared across modules. The CLI maps these onto exit codes:
// ConfigError -> 2, IoError -> 4, everything else below -> 3 (numeric).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Coefficient evaluation returned a non-finite value; message names the probe.
struct EvaluationError : NumericError {
  using NumericError::NumericError;
};
// Argument outside an operation's stated domain (e.g. s <= t).
struct DomainError : NumericError {
  using NumericError::NumericError;
};
// Covariance failed to be positive definite (Cholesky failure).
struct DegeneracyError : NumericError {
  using NumericError::NumericError;
};
// Adaptive ODE solver step-size underflow.
struct StiffnessError : NumericError {
  using NumericError::NumericError;
};
// Requested derivative order above the supported range.
struct UnsupportedOrderError : NumericError {
  using NumericError::NumericError;
};
// Operation restricted to block dimension d = 1 (or d <= 2).
struct UnsupportedDimensionError : NumericError {
  using NumericError::NumericError;
};
// No candidate constant on the dominating-kernel ladder could be certified.
struct FitFailureError : NumericError {
  using NumericError::NumericError;
};
// The persistence bound requires delta = gamma - 1/(1-alpha) > 0.
struct AboveThresholdError : NumericError {
  using NumericError::NumericError;
};
// Non-increasing simulation time grid.
struct GridError : NumericError {
  using NumericError::NumericError;
};
// Simulated state became non-finite; message carries the first bad index.
struct BlowUpError : NumericError {
  using NumericError::NumericError;
};

}  // namespace hypolab
