#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace egonoise {

// Base of every error thrown by the library. Subclasses let callers (the CLI
// in particular) map failures to distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Inconsistent dimensions between two objects that must agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Input shorter than the minimum the operation can work with.
class TooShortError : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

// Malformed or corrupted persisted data. `field` names the offending part.
class FormatError : public Error {
 public:
  FormatError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A dictionary built for one acquisition setup used with another.
class FingerprintError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace egonoise
