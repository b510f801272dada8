#pragma once

#include <stdexcept>
#include <string>

namespace sap {

/// Base class for every failure this library reports.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed text where a document was expected. Carries the 1-based line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line) : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 1;
};

/// Well-formed JSON that does not match the documented schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// An operation was handed data that violates its preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A model response could not be turned into a usable document.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

/// The response contained no fenced code block at all.
class NoPlanFoundError : public ExtractionError {
 public:
  using ExtractionError::ExtractionError;
};

/// Transport or protocol failure while talking to a model backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace sap
