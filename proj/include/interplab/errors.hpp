#pragma once

#include <stdexcept>
#include <string>

namespace interplab {

/// A parameter lies outside the documented domain of an operation.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Structurally unusable input (empty profile, NaN values, length mismatch).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested method cannot be applied (missing gradient, dimension too
/// large for tensor quadrature, precision guard).
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A verification step failed; the message names the violated condition.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command line or configuration; the message names the offending key.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace interplab
