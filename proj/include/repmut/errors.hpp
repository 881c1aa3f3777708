#pragma once

#include <stdexcept>
#include <string>

namespace repmut {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: invalid payoffs, malformed states, inadmissible mutation rates.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed: step-size underflow, Newton divergence,
/// missing sign change, undetermined long-time behavior.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InadmissibleMutation : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class StepUnderflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SimplexEscape : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoSignChange : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Neither a fixed point nor a cycle was reached before the time horizon.
class Undetermined : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace repmut
