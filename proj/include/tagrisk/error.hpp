#pragma once

#include <stdexcept>
#include <string>

namespace tagrisk {

/// Process exit codes used by the command line front end.
enum class ExitCode : int {
  Ok = 0,
  Usage = 1,
  Data = 2,
  NonConvergence = 3,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const noexcept { return ExitCode::Data; }
};

/// Bad or missing configuration: unknown keys, missing files, bad parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Usage; }
};

/// Input data violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or payload. Carries the 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override {
    return ExitCode::NonConvergence;
  }
};

}  // namespace tagrisk
