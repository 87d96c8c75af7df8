#pragma once

#include <stdexcept>
#include <string>

namespace sceneval {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Schema or answer-key content that violates its structural invariants.
/// `where` is a JSON-pointer-like location (e.g. "categories[2].rules[0]").
class SchemaError : public Error {
public:
  SchemaError(std::string where, const std::string &what)
      : Error(where + ": " + what), where_(std::move(where)) {}
  const std::string &where() const noexcept { return where_; }

private:
  std::string where_;
};

class VideoError : public Error {
public:
  using Error::Error;
};

/// The clip is too short for the requested sampling; callers skip the scenario.
class InsufficientDuration : public VideoError {
public:
  using VideoError::VideoError;
};

/// An operation's input does not meet its precondition (e.g. no scenarios).
class PreconditionError : public Error {
public:
  using Error::Error;
};

class StoreCorruption : public Error {
public:
  using Error::Error;
};

} // namespace sceneval
