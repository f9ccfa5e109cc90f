#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nmfvi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched vector/matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate, failed factorization, non-convergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A response value outside the family's domain. Carries the row index.
class DomainError : public Error {
 public:
  DomainError(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Argument outside the admissible range (e.g. a mean outside the support hull).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Operation not defined for the requested prior/family/method combination.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Exact computation requested beyond its size cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Invalid constructor or generator parameter.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Tilt with vanishing variance at a coordinate.
class DegenerateTiltError : public NumericError {
 public:
  DegenerateTiltError(std::size_t coordinate, const std::string& what)
      : NumericError(what), coordinate_(coordinate) {}
  std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::size_t coordinate_;
};

}  // namespace nmfvi
