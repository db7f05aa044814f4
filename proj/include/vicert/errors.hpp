#pragma once

#include <stdexcept>

namespace vicert {

/// Base type for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- model validation ---------------------------------------------------

/// A transition row has an entry outside [0,1] or does not sum to 1.
class NonStochasticRow : public Error {
 public:
  using Error::Error;
};

/// An expected reward (or raw reward tensor entry) exceeds 1 in magnitude.
class RewardOutOfBounds : public Error {
 public:
  using Error::Error;
};

/// Discount factor outside [0, 1).
class BadGamma : public Error {
 public:
  using Error::Error;
};

/// State/action pair outside the model's index ranges.
class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

// --- certificates --------------------------------------------------------

/// Contraction margin epsilon is non-positive or gamma + epsilon >= 1.
class BadEpsilon : public Error {
 public:
  using Error::Error;
};

/// Certificate series failed to converge (malformed mode matrix).
class NonConvergentSeries : public Error {
 public:
  using Error::Error;
};

/// Linear-certificate weight vector has a non-positive entry.
class NonPositiveW : public Error {
 public:
  using Error::Error;
};

/// A constructed certificate violates one of its defining bounds.
class CertificateInvalid : public Error {
 public:
  using Error::Error;
};

// --- solvers and checks --------------------------------------------------

/// Policy evaluation system could not be solved to tolerance.
class SingularEvaluation : public Error {
 public:
  using Error::Error;
};

/// Exhaustive policy enumeration would exceed the configured cap.
class TooManyPolicies : public Error {
 public:
  using Error::Error;
};

/// A componentwise sandwich inequality was violated beyond tolerance.
class BoundViolation : public Error {
 public:
  using Error::Error;
};

/// A per-iteration convergence claim failed beyond tolerance.
class ClaimViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace vicert
