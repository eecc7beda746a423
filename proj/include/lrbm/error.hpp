#pragma once

#include <stdexcept>
#include <string>

namespace lrbm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of the inputs do not agree with the model.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied value violates an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: a non-PD precision matrix, a divergent integral,
/// non-finite parameters, a failed factorization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A region precision matrix that is singular or indefinite.
class NonPdRegionError : public NumericalError {
 public:
  NonPdRegionError(const std::string& what, double smallest_eigenvalue)
      : NumericalError(what), smallest_eigenvalue_(smallest_eigenvalue) {}

  double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

/// The marginal density is not integrable for the given parameters.
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// File parsing or I/O failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrbm
