#ifndef PODPO_ERRORS_HPP
#define PODPO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace podpo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when array dimensions do not compose.
class ShapeError : public Error {
 public:
  ShapeError(std::string what, long expected, long actual)
      : Error(what + ": expected " + std::to_string(expected) + ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  [[nodiscard]] long expected() const noexcept { return expected_; }
  [[nodiscard]] long actual() const noexcept { return actual_; }

 private:
  long expected_;
  long actual_;
};

/// Raised when a NaN or Inf shows up where finite values are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Raised for invalid configuration values; names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& constraint)
      : Error("config field '" + field + "': " + constraint), field_(field) {}

  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Raised by checkpoint I/O.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace podpo

#endif  // PODPO_ERRORS_HPP
