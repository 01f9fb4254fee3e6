#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pscontour {

/// Process exit codes shared by the CLI and the error hierarchy.
enum class ExitCode : int {
  ok = 0,
  verification_failure = 1,
  input_error = 2,
  capacity_error = 3,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const noexcept = 0;
};

/// Malformed arguments, unparseable files, inconsistent dimensions.
class InputError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::input_error; }
};

/// A model document that violates a structural rule (e.g. term diameter > r).
class ModelError : public InputError {
 public:
  using InputError::InputError;
};

/// An operation was called on a model that lacks the required certificate.
class PreconditionError : public InputError {
 public:
  using InputError::InputError;
};

/// Enumeration space larger than the configured budget. Carries the exact size.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what_space, std::uint64_t required, std::uint64_t budget)
      : Error(what_space + ": " + std::to_string(required) + " items exceed budget " +
              std::to_string(budget)),
        required_(required),
        budget_(budget) {}
  /// Saturates at UINT64_MAX when the true count overflows.
  std::uint64_t required() const noexcept { return required_; }
  std::uint64_t budget() const noexcept { return budget_; }
  ExitCode exit_code() const noexcept override { return ExitCode::capacity_error; }

 private:
  std::uint64_t required_;
  std::uint64_t budget_;
};

/// A proven inequality failed on concrete data.
class VerificationFailure : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::verification_failure; }
};

/// base^exponent, saturating at UINT64_MAX.
inline std::uint64_t saturating_pow(std::uint64_t base, std::uint64_t exponent) {
  std::uint64_t result = 1;
  for (std::uint64_t k = 0; k < exponent; ++k) {
    if (base != 0 && result > UINT64_MAX / base) return UINT64_MAX;
    result *= base;
  }
  return result;
}

}  // namespace pscontour
