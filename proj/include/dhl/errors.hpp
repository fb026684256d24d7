#pragma once

#include <stdexcept>
#include <string>

namespace dhl {

// Base class for all library errors so callers can catch dhl::Error wholesale.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Evaluation requested at (or through) a pole of a rational expression.
class PoleError : public Error {
 public:
  using Error::Error;
};

// Input outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Inverse-branch selection could not be resolved unambiguously.
class BranchAmbiguityError : public Error {
 public:
  using Error::Error;
};

// An iteration failed to settle within its budget.
class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

// A series evaluation hit its term cap before meeting the tolerance.
class TruncationFailure : public Error {
 public:
  using Error::Error;
};

// A nominally contracting iteration stopped making progress.
class NonContractionError : public Error {
 public:
  using Error::Error;
};

// A size guard (tree depth, site count, ...) was exceeded.
class SizeGuardError : public Error {
 public:
  using Error::Error;
};

// Derivative-order bookkeeping would leave the supported jet range.
class UnsupportedOrderError : public Error {
 public:
  using Error::Error;
};

// An exponent ratio sits too close to an integer to split into (m, alpha).
class NearIntegerResonance : public Error {
 public:
  using Error::Error;
};

// File or stream output failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dhl
