#pragma once

#include <stdexcept>
#include <string>

namespace fluxmet {

// Every failure raised by the library derives from Error so callers can
// catch the family at once; the subclasses mirror the distinct failure
// contracts of each operation.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input violates an operation's precondition (e.g. non-Hermitian matrix
// handed to the Hermitian eigensolver).
class ContractError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public Error {
 public:
  using Error::Error;
};

// m†m is not proportional to the code projector.
class NonIsotropicError : public Error {
 public:
  using Error::Error;
};

class StepError : public Error {
 public:
  using Error::Error;
};

class InstabilityError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Recovery lost trace: the error space is not spanned by the Kraus set.
class LeakageError : public Error {
 public:
  using Error::Error;
};

class CodeConditionError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class OrthogonalityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fluxmet
