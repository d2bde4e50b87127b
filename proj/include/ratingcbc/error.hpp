#pragma once

#include <stdexcept>
#include <string>

namespace ratingcbc {

// Exit codes used by the command-line tool; each error class maps to one.
enum class ErrorClass { io = 2, validation = 3, numerical = 4 };

class Error : public std::runtime_error {
public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }
  int exit_code() const noexcept { return static_cast<int>(cls_); }

private:
  ErrorClass cls_;
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(ErrorClass::io, what) {}
};

class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error(ErrorClass::validation, what) {}
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(ErrorClass::numerical, what) {}
};

} // namespace ratingcbc
