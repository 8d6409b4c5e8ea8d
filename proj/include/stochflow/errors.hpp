#pragma once

#include <stdexcept>
#include <string>

namespace stochflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidPointError : public Error {
public:
  using Error::Error;
};

class DegenerateDensityError : public Error {
public:
  using Error::Error;
};

class NotSubalgebraError : public Error {
public:
  using Error::Error;
};

class InvalidAlgebraError : public Error {
public:
  using Error::Error;
};

class ConfigurationError : public Error {
public:
  using Error::Error;
};

class RealizationError : public Error {
public:
  using Error::Error;
};

/// Syntax error in an expression; `position` is a 0-based byte offset.
class ParseError : public Error {
public:
  ParseError(std::string message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)), position_(position),
        detail_(std::move(message)) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  std::size_t position_;
  std::string detail_;
};

} // namespace stochflow
