#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace oqnet {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied inputs that violate a precondition (shape, domain, mode).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a trustworthy result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class DomainError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class LookupError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ValidationError : public PreconditionError {
 public:
  ValidationError(const std::string& what, std::vector<std::string> violations)
      : PreconditionError(what), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// FB = 0: the linear high-fidelity expansion does not apply.
class IsolatedRegimeError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ModeMismatchError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class InsufficientIsolationError : public PreconditionError {
 public:
  InsufficientIsolationError(const std::string& what, std::size_t available)
      : PreconditionError(what), available_(available) {}
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t available_;
};

class NotIsolatingError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(const std::string& what, double rcond)
      : NumericalError(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

class DegenerateAsymptoticsError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OptimizationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace oqnet
