#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace toyns {

/// Precondition or configuration violation. The CLI maps it to exit code 2.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Blow-up, instability or non-finite values produced by a time integrator.
/// The CLI maps it to exit code 3.
class NumericalFailure : public std::runtime_error {
public:
  NumericalFailure(const std::string& what, double time, std::array<double, 3> location,
                   double max_value)
      : std::runtime_error(what), time_(time), location_(location), max_value_(max_value) {}

  double time() const noexcept { return time_; }
  const std::array<double, 3>& location() const noexcept { return location_; }
  double max_value() const noexcept { return max_value_; }

private:
  double time_;
  std::array<double, 3> location_;
  double max_value_;
};

}  // namespace toyns
