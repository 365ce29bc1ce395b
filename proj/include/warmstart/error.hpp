#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace warmstart {

/// Tensor dimensions disagree with the network architecture.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller-supplied data or arguments are out of range.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An API precondition between two library objects was broken
/// (stale forward cache, incongruent optimizer state, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Experiment or CLI configuration is invalid.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, double param_norm)
      : std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch) +
                           " (parameter norm " + std::to_string(param_norm) + ")"),
        epoch_(epoch),
        param_norm_(param_norm) {}

  std::size_t epoch() const noexcept { return epoch_; }
  double param_norm() const noexcept { return param_norm_; }

 private:
  std::size_t epoch_;
  double param_norm_;
};

}  // namespace warmstart
