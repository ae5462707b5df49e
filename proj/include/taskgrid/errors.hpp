#pragma once

#include <stdexcept>
#include <string>

namespace taskgrid {

/// Base for every domain error raised by the library. The CLI maps these to
/// exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed document: bad JSON, missing or mistyped field. `field()` names
/// the offending key path when known.
class ParseError : public Error {
 public:
  explicit ParseError(std::string field, const std::string& detail = {})
      : Error("parse error at '" + field + "'" +
              (detail.empty() ? std::string{} : ": " + detail)),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace taskgrid
