#pragma once

#include <stdexcept>
#include <string>

namespace netnmf {

/// Base class of every error raised by the library.
///
/// The hierarchy splits into input errors (bad data, bad configuration,
/// wrong rank) and numerical errors (non-convergence, singular systems).
/// The command-line tool maps the former to exit code 2 and the latter to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError(what + " (line " + std::to_string(line) + ")"), detail_(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t line_;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

class WrongRank : public InputError {
 public:
  using InputError::InputError;
};

// A column of B or C sums to zero, so the unit-mass parametrization is undefined.
class ZeroColumn : public InputError {
 public:
  using InputError::InputError;
};

class NotAdmissible : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularQ : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IterationLimit : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Zero intensity with a positive count, or a nonpositive exponential rate.
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonStationary : public InputError {
 public:
  using InputError::InputError;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InnerSolverFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BoundaryBenchmark : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularBordered : public NumericalError {
 public:
  SingularBordered(const std::string& what, int rank, int dimension)
      : NumericalError(what), rank_(rank), dimension_(dimension) {}
  int rank() const noexcept { return rank_; }
  int dimension() const noexcept { return dimension_; }

 private:
  int rank_;
  int dimension_;
};

class TooFewValidDraws : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace netnmf
