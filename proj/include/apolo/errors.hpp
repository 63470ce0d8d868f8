#pragma once

#include <stdexcept>
#include <string>

namespace apolo {

/// Base of every error raised by the library. Callers that only need to
/// distinguish "our" failures from std failures can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidLabelError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input line; message carries the line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a dataset invariant (unknown label,
// duplicate id, wrong cardinality).
class SchemaError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure, or a non-retryable HTTP status.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, int status = 0)
      : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class ScriptMissError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Agent output that stayed outside its grammar after all re-asks.
class GrammarError : public Error {
 public:
  using Error::Error;
};

class PlanParseError : public GrammarError {
 public:
  using GrammarError::GrammarError;
};

class VerdictParseError : public GrammarError {
 public:
  using GrammarError::GrammarError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ResumeError : public Error {
 public:
  using Error::Error;
};

}  // namespace apolo
