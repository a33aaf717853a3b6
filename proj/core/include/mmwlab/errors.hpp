#pragma once

#include <stdexcept>
#include <string>

namespace mmwlab {

/// An argument lies outside the region where a formula is defined.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Adaptive quadrature did not reach the requested tolerance.
class NumericError : public std::runtime_error {
public:
  NumericError(const std::string& what, double achieved_error)
      : std::runtime_error(what), achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }

private:
  double achieved_error_;
};

class NotFoundError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised by geometric queries that need at least one building.
class NoBuildingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration input (unknown key, unparsable value).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmwlab
