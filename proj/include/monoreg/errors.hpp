#pragma once

#include <stdexcept>
#include <string>

namespace monoreg {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument is out of its domain (non-positive step, bad schedule, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a structural requirement (asymmetric matrix, empty box, no positive spectrum).
class DataError : public Error {
 public:
  using Error::Error;
};

/// The linear system M x = c has no solution.
class InconsistentSystemError : public DataError {
 public:
  InconsistentSystemError(const std::string& what, double residual)
      : DataError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// An iterative method failed: iteration cap hit, divergence, non-finite values.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace monoreg
