#pragma once

#include <stdexcept>
#include <string>

namespace switchcount {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input panel is missing at least one (segment, period) cell or repeats one.
class BalancedPanelError : public Error {
 public:
  using Error::Error;
};

// A count is negative or not an integer.
class CountDomainError : public Error {
 public:
  using Error::Error;
};

// Column layout or vector dimensions do not line up.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A parameter lies outside its domain (non-positive rate, probability outside range, ...).
class ParamDomainError : public Error {
 public:
  using Error::Error;
};

// Operation not defined for the requested model specification.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Starting point has a non-finite likelihood.
class InitError : public Error {
 public:
  using Error::Error;
};

// Standard errors were requested but the Hessian could not be inverted.
class DiagnosticsUnavailable : public Error {
 public:
  using Error::Error;
};

// Malformed numeric input to a reduction (non-finite draw, too few chains, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Goodness-of-fit pooling left fewer than two count categories.
class DegenerateCellsError : public Error {
 public:
  using Error::Error;
};

// Within-chain variance is zero.
class DegenerateVarianceError : public Error {
 public:
  using Error::Error;
};

}  // namespace switchcount
