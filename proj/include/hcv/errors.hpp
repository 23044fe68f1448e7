#pragma once

#include <stdexcept>
#include <string>

namespace hcv {

/// A computation failed for numerical reasons (not caller error).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The ODE integrator could not meet its tolerance.
class IntegrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace hcv
