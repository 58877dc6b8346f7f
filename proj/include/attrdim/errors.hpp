#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace attrdim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument: dimension mismatch, out-of-domain value, unknown name.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A trajectory left the representable region (non-finite or |x_i| > 1e8).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> last_state, double last_time,
                  std::optional<std::size_t> sample = std::nullopt)
      : Error(what), last_state_(std::move(last_state)), last_time_(last_time), sample_(sample) {}

  const std::vector<double>& last_state() const noexcept { return last_state_; }
  double last_time() const noexcept { return last_time_; }
  /// Index of the offending sample when raised from a sweep.
  std::optional<std::size_t> sample() const noexcept { return sample_; }

 private:
  std::vector<double> last_state_;
  double last_time_;
  std::optional<std::size_t> sample_;
};

/// Not enough rows or samples for a fit.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Curve refinement exceeded its vertex budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// A bound is infinite (e.g. a zero singular value in a denominator).
class UnboundedError : public Error {
 public:
  using Error::Error;
};

/// A report stage needs an artifact that is missing.
class DependencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace attrdim
