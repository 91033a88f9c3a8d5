#pragma once

#include <stdexcept>
#include <string>

namespace foamck {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A call violated a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position, std::size_t line = 0)
      : Error(make_message(message, position, line)), position_(position), line_(line) {}

  std::size_t position() const { return position_; }
  std::size_t line() const { return line_; }

 private:
  static std::string make_message(const std::string& m, std::size_t pos, std::size_t line) {
    std::string out = line > 0 ? "line " + std::to_string(line) + ", " : std::string{};
    return out + "column " + std::to_string(pos + 1) + ": " + m;
  }
  std::size_t position_;
  std::size_t line_;
};

/// Raised when two series or nets do not share the structure an operation needs.
class MismatchError : public Error {
 public:
  using Error::Error;
};

/// Coefficient overflow in the local solver: the nearest singularity is too
/// close to the expansion center for the requested order.
class RadiusCollapse : public Error {
 public:
  RadiusCollapse(int degree, const std::string& detail)
      : Error("radius collapse at degree " + std::to_string(degree) + ": " + detail),
        degree_(degree) {}
  int degree() const { return degree_; }

 private:
  int degree_;
};

class ComplementNotDense : public Error {
 public:
  using Error::Error;
};

class BudgetViolation : public Error {
 public:
  using Error::Error;
};

class NoSeed : public Error {
 public:
  using Error::Error;
};

}  // namespace foamck
