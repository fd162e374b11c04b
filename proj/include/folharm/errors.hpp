#pragma once

#include <stdexcept>
#include <string>

namespace folharm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied parameters. `field()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Exponential-map step beyond the injectivity cap; callers shrink dt.
class StepTooLargeError : public Error {
 public:
  using Error::Error;
};

class InvalidMapError : public Error {
 public:
  using Error::Error;
};

class CompositionError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDomainError : public Error {
 public:
  using Error::Error;
};

class FlowDivergedError : public Error {
 public:
  using Error::Error;
};

}  // namespace folharm
