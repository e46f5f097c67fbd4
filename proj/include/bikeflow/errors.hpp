#pragma once

#include <stdexcept>
#include <string>

namespace bikeflow {

// Base class for all toolkit errors. Subcommands map these to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class MalformedDocument : public Error {
 public:
  using Error::Error;
};

class NonMonotonicTimestamp : public Error {
 public:
  using Error::Error;
};

class DuplicateStationInSnapshot : public Error {
 public:
  using Error::Error;
};

class FileNotFound : public Error {
 public:
  using Error::Error;
};

// Carries the 1-based line number of the offending row.
class SchemaViolation : public Error {
 public:
  SchemaViolation(const std::string& what, long line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class UnknownStation : public Error {
 public:
  using Error::Error;
};

class EvenWindow : public Error {
 public:
  using Error::Error;
};

class NoMatchingDays : public Error {
 public:
  using Error::Error;
};

class TimeOffGrid : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class TooShort : public Error {
 public:
  using Error::Error;
};

class KTooLarge : public Error {
 public:
  using Error::Error;
};

class MetaKTooLarge : public Error {
 public:
  using Error::Error;
};

class RangeEmpty : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bikeflow
