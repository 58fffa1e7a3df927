// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace polar {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arithmetic broke down: an iteration failed to converge, a factorization
/// lost positive definiteness, or a value became non-finite.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, int iterations = 0)
      : Error(what), iterations_(iterations) {}
  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

/// Input sits on (or numerically next to) a singular set, e.g. a
/// rank-deficient matrix handed to the polar decomposition.  Samplers treat
/// this as a divergent transition rather than a fatal condition.
class DegenerateInputError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed user data (CSV cells, config values).
class IngestionError : public Error {
 public:
  using Error::Error;
};

}  // namespace polar
