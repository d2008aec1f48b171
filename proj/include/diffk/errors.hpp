#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diffk {

/// Base class of every error raised by the library. The CLI maps these to
/// exit code 1 (domain error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A point was outside the body, or an argument outside its admissible set.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error("parse error at offset " + std::to_string(offset) + ": " + message),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Raised when an expression cannot be evaluated (division by zero, ...).
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// A certificate (Lipschitz bound, contraction constant, ...) was found to be
/// inconsistent with the observed behaviour.
class CertificateError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double observed_ratio)
      : Error(message), observed_ratio_(observed_ratio) {}
  double observed_ratio() const noexcept { return observed_ratio_; }

 private:
  double observed_ratio_;
};

/// A finite-difference stencil would leave the body.
class StencilError : public Error {
 public:
  using Error::Error;
};

}  // namespace diffk
