#pragma once

#include <stdexcept>
#include <string>

namespace cogalloc {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A modelling constraint is violated, e.g. an FC threshold above the number
// of reporting users.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

// The caller invoked an operation outside its documented precondition.
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

// A numerical routine could not reach its tolerance.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Work exceeds a configured size limit (exhaustive search).
class CapacityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cogalloc
