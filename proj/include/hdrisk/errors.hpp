#pragma once

#include <stdexcept>
#include <string>

namespace hdrisk {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied parameters (bad config field, out-of-range value).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class UnsupportedPair : public Error {
 public:
  using Error::Error;
};

class SvdFailure : public Error {
 public:
  using Error::Error;
};

/// No closed-form Jacobian trace is known for the (loss, penalty) pair.
class NoClosedForm : public Error {
 public:
  using Error::Error;
};

/// tr[d psi_hat / dy] is exactly zero: every observation is an outlier.
class DegenerateFactor : public Error {
 public:
  using Error::Error;
};

/// A vector field evaluated inside a divergence estimate failed.
class FieldEvaluationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace hdrisk
