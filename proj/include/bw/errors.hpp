#pragma once

#include <stdexcept>
#include <string>

namespace bw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: non-finite entries, broken preconditions, bad options.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class DimensionMismatchError : public InputError {
 public:
  DimensionMismatchError(long a, long b)
      : InputError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
  using InputError::InputError;
};

// A divisor of the Sylvester solve vanished.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// ker(F) is not contained in ker(G): no optimal map from N(0,F) to N(0,G).
class KernelMismatchError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ExperimentError : public Error {
 public:
  using Error::Error;
};

}  // namespace bw
