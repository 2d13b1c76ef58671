#pragma once

#include <stdexcept>
#include <string>

namespace dialsel {

// Base class for all recoverable library errors. The CLI maps these to
// exit code 1; usage problems are handled by the argument parser (exit 2).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; message carries file name and line number.
class LoadError : public Error {
 public:
  LoadError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dialsel
