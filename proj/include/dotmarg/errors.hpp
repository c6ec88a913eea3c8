#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dotmarg {

// Invalid or inconsistent user input (layer specs, optode placement, ROI specs).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PlacementError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class LaunchError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Two objects that must agree (frame pair lists, matrix shapes) do not.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A configured source-detector pair recorded no photon packets.
class DeadChannelError : public std::runtime_error {
 public:
  DeadChannelError(const std::string& what, std::vector<std::pair<int, int>> channels)
      : std::runtime_error(what), channels_(std::move(channels)) {}

  const std::vector<std::pair<int, int>>& channels() const { return channels_; }

 private:
  std::vector<std::pair<int, int>> channels_;
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, double condition_estimate = 0.0)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

}  // namespace dotmarg
