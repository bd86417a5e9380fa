#pragma once

#include <stdexcept>
#include <string>

namespace convdiff {

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration (grid ratios, boxes, keys).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problem with the data itself: too short, degenerate statistics, parse failures.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index or window falls outside the available samples.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class OptimizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace convdiff
