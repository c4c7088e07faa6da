#pragma once

#include <stdexcept>
#include <string>

namespace xbar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shapes, ranges, bounds).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Configuration or file content failed validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Linear solve failed or did not reach the residual budget.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual);
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Throws ContractViolation with `message` unless `condition` holds.
void require(bool condition, const std::string& message);

}  // namespace xbar
