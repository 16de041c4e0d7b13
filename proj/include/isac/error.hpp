#pragma once

#include <stdexcept>
#include <string>

namespace isac {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario document (syntax, wrong JSON type, unknown field).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A well-formed input that violates a domain invariant. `field()` names the
/// offending entry using the scenario-file path (e.g. "num_rf_chains").
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or inconsistent numerical state, usually a non-PSD input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive search would enumerate more subsets than allowed.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace isac
