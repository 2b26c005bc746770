#pragma once

#include <stdexcept>
#include <string>

namespace wormqmc {

/// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document (names the offending field).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A Hamiltonian or argument outside the admissible family.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Instance too large for a desk-scale exact engine.
class CapExceeded : public Error {
 public:
  CapExceeded(const std::string& what, double estimate) : Error(what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

/// Sampling pipeline failure (e.g. the chain never returns to C0).
class EstimatorError : public Error {
 public:
  using Error::Error;
};

/// Broken worldline invariants. Indicates a bug, not bad input.
class StructureError : public Error {
 public:
  using Error::Error;
};

}  // namespace wormqmc
