#pragma once

#include <stdexcept>
#include <string>

namespace spanforge {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad JSON, bad UTF-8, wrong schema.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class MissingLabelError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// External reader unreachable, died, or answered with an error.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace spanforge
