#pragma once

#include <stdexcept>
#include <string>

namespace qdtm {

// Base of every error the library throws. The CLI maps ParameterError and
// FormatError to the validation exit code and everything else to the
// runtime exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// A caller-supplied value violates a precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "parameter"; }
};

// Malformed input file or record.
class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format"; }
};

// Unknown token id or key.
class LookupError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "lookup"; }
};

// An operation had nothing to work with (empty corpus, empty retrieval,
// empty parent topic).
class EmptyResultError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "empty"; }
};

// Internal bookkeeping went wrong. Never expected in a correct build.
class ConsistencyError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "consistency"; }
};

}  // namespace qdtm
