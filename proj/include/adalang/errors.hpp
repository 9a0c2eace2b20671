#pragma once

#include <stdexcept>
#include <string>

namespace adalang {

/// Bad input: configuration values, violated preconditions.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to reach its tolerance (quadrature tails,
/// grid refinement, fixed-point iteration).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A criterion audit found a violation.
class AuditFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adalang
