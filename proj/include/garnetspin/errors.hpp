#pragma once

#include <stdexcept>
#include <string>

namespace garnetspin {

/// Argument outside the domain of an operation (bad site id, zero vector...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Data cannot determine the requested parameters.
class UnderdeterminedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input (config or data file). `line` is 1-based, 0 if unknown.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& source, int line, const std::string& message)
      : std::runtime_error(format(source, line, message)), line_(line) {}

  int line() const { return line_; }

 private:
  static std::string format(const std::string& source, int line, const std::string& message) {
    if (line > 0) return source + ":" + std::to_string(line) + ": " + message;
    return source + ": " + message;
  }
  int line_;
};

}  // namespace garnetspin
