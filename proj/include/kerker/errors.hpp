#pragma once

#include <stdexcept>
#include <string>

namespace kerker {

// Precondition or argument-range violation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An iterative or series computation did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace kerker
