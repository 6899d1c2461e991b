#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wv {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Point evaluation requested where a kernel is unbounded.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operation not defined for the given kernel family.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical method failed to reach its accuracy target.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Leading coefficient 1+2k*phi dropped below the admissible floor.
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(const std::string& what, double margin)
      : std::runtime_error(what), margin_(margin) {}
  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

class SingularSolveError : public std::runtime_error {
 public:
  SingularSolveError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Fixed-point iterate left the ball 4|k| |phi|_inf <= 1.
class BallViolation : public std::runtime_error {
 public:
  BallViolation(const std::string& what, int iterate, double margin)
      : std::runtime_error(what), iterate_(iterate), margin_(margin) {}
  int iterate() const noexcept { return iterate_; }
  double margin() const noexcept { return margin_; }

 private:
  int iterate_;
  double margin_;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

}  // namespace wv
