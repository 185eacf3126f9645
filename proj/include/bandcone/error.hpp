#pragma once

#include <stdexcept>
#include <string>

namespace bandcone {

/// Broad failure class, used by the CLI to pick an exit status.
enum class ErrorKind { validation, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

/// Malformed or inconsistent user input (datasets, regions, configs).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

/// Adaptive quadrature ran out of subdivisions.
class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, double best_estimate,
                  double error_estimate)
      : NumericalError(what),
        best_estimate_(best_estimate),
        error_estimate_(error_estimate) {}
  double best_estimate() const noexcept { return best_estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double best_estimate_;
  double error_estimate_;
};

/// Root bracket without a sign change.
class BracketError : public NumericalError {
 public:
  BracketError(const std::string& what, double f_lo, double f_hi)
      : NumericalError(what), f_lo_(f_lo), f_hi_(f_hi) {}
  double f_lo() const noexcept { return f_lo_; }
  double f_hi() const noexcept { return f_hi_; }

 private:
  double f_lo_;
  double f_hi_;
};

/// Matrix failed a positive-definiteness or conditioning requirement.
class DecompositionError : public NumericalError {
 public:
  DecompositionError(const std::string& what, double condition)
      : NumericalError(what), condition_(condition) {}
  /// Ratio of largest to smallest eigenvalue (infinity when not positive).
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Logistic fit failed to converge (separation or divergence).
class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, int iterations)
      : NumericalError(what), iterations_(iterations) {}
  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

}  // namespace bandcone
