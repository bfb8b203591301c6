#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace cgame {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument: dimension mismatch, value outside its admissible range.
class InputError : public Error {
 public:
  using Error::Error;
};

// The regularized Gram matrix stopped being numerically positive definite.
class FactorizationError : public Error {
 public:
  FactorizationError(std::size_t data_size, const std::string& what)
      : Error(what + " (data size " + std::to_string(data_size) + ")"),
        data_size_(data_size) {}

  std::size_t data_size() const noexcept { return data_size_; }

 private:
  std::size_t data_size_;
};

// choose/feedback called out of order, or with data that does not match the
// preceding call.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration; `field()` is a JSON-pointer-like path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// An exhaustive computation was refused because the instance is too large.
class SizeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A quantity that must vary (e.g. an agent's reward range) is constant.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace cgame
