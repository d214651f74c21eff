#pragma once

#include <stdexcept>
#include <string>

namespace sbren {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs are well formed but structurally incompatible (grid mismatch,
/// violated normality / nilpotency, shape mismatch, asymmetric matrix).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed. Carries the best estimate obtained so far
/// when one is available.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, double best_estimate = 0.0)
      : Error(what), best_estimate_(best_estimate) {}

  double best_estimate() const noexcept { return best_estimate_; }

 private:
  double best_estimate_;
};

/// A requested object would exceed a configured size limit.
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace sbren
