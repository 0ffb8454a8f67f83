#pragma once

#include <stdexcept>
#include <string>

namespace acord {

/// Raised for malformed configuration: dimension mismatches, bad indices,
/// out-of-range hyperparameters.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised for client requests the rollout service cannot honor.
struct RequestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A loss went non-finite during training.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace acord
