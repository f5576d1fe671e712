#pragma once

#include <stdexcept>
#include <string>

namespace ifbound {

/// Base class for all library errors. Each subclass maps to a CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad configuration, schema violation or malformed input.
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// A conditioning value that the exposure mapping can never take.
class SupportError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// No unit realized one of the two exposure levels, so N̂_a = 0.
class DegenerateArmError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// A propensity needed by the estimator is zero (or below 1e-300).
class PositivityError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Enumeration or solver size cap exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

}  // namespace ifbound
