#pragma once

#include <stdexcept>
#include <string>

namespace lsopt {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A caller supplied an argument outside an operation's domain.
class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& what) : Error(what) {}
};

// A requested feature needs state the object does not carry
// (e.g. teacher labels were never attached to the dataset).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// The problem instance makes the requested quantity meaningless
// (e.g. delta is undefined because sigma^2 = 0).
class DegenerateProblemError : public Error {
 public:
  explicit DegenerateProblemError(const std::string& what) : Error(what) {}
};

// The two-stage schedule hypothesis fails for the given constants.
class ScheduleInfeasibleError : public Error {
 public:
  explicit ScheduleInfeasibleError(const std::string& what) : Error(what) {}
};

// A config or data file failed to parse; carries the offending location.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, const std::string& field)
      : Error(format(what, line, field)), line_(line), field_(field) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(const std::string& what, int line, const std::string& field) {
    std::string msg = "line " + std::to_string(line);
    if (!field.empty()) msg += ", key '" + field + "'";
    return msg + ": " + what;
  }
  int line_;
  std::string field_;
};

}  // namespace lsopt
