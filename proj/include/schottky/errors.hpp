#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace schottky {

using cplx = std::complex<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched matrix/vector dimensions or an index outside its range.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on the input domain failed (e.g. Im(Omega) not positive definite).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Evaluation exactly at a pole or on a diagonal singularity.
class PoleError : public Error {
 public:
  using Error::Error;
};

/// (I - A) could not be factorized.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// Schottky parameters outside the disjoint-circle region. Carries every
/// offending pair of signed handle indices.
class SurfaceValidationError : public Error {
 public:
  SurfaceValidationError(std::string what, std::vector<std::pair<int, int>> pairs)
      : Error(std::move(what)), pairs_(std::move(pairs)) {}

  const std::vector<std::pair<int, int>>& offending_pairs() const { return pairs_; }

 private:
  std::vector<std::pair<int, int>> pairs_;
};

/// Truncation escalation did not settle. Carries the last two iterates.
class ConvergenceError : public Error {
 public:
  ConvergenceError(std::string what, cplx previous, cplx last)
      : Error(std::move(what)), previous_(previous), last_(last) {}

  cplx previous() const { return previous_; }
  cplx last() const { return last_; }

 private:
  cplx previous_;
  cplx last_;
};

/// A group element that should be loxodromic was not.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace schottky
