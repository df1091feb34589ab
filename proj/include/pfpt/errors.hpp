#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace pfpt {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file. `line()` is 1-based; 0 means "end of file".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A numerical procedure failed to converge or produced a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Far-field truncation of a boundary-value solve did not settle.
class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A Laplace-transform evaluator threw while being sampled on an inversion contour.
class LaplaceEvaluationError : public NumericalError {
 public:
  LaplaceEvaluationError(std::complex<double> beta, const std::string& cause)
      : NumericalError("transform evaluation failed at beta=(" + std::to_string(beta.real()) + "," +
                       std::to_string(beta.imag()) + "): " + cause),
        beta_(beta) {}
  std::complex<double> beta() const noexcept { return beta_; }

 private:
  std::complex<double> beta_;
};

}  // namespace pfpt
