#pragma once

#include <stdexcept>
#include <string>

namespace kickwell {

// Every failure raised by the library derives from Error so callers can
// catch broadly; the subclasses map onto distinct CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class UnitarityError : public Error {
 public:
  using Error::Error;
};

// Operation is undefined for the given input (singular mapping, broken
// symmetry, pole proximity).
class DomainError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class CacheError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kickwell
