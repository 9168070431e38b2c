#pragma once

#include <stdexcept>
#include <string>

namespace mildlevy {

/// Precondition of an operation was not met by the caller.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bad model, catalog entry or experiment configuration.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computed quantity became NaN or infinite.
class NumericOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simulated path left the configured blow-up ball.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double time, double norm, std::string context = {})
      : std::runtime_error("path diverged at t=" + std::to_string(time) +
                           " (norm " + std::to_string(norm) + ")" +
                           (context.empty() ? "" : ": " + context)),
        time_(time),
        norm_(norm) {}

  double time() const noexcept { return time_; }
  double norm() const noexcept { return norm_; }

 private:
  double time_;
  double norm_;
};

}  // namespace mildlevy
