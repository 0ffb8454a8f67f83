#pragma once

// Kinematic cruise task: a body moving along x with a tiltable hull. Speed and
// hull tilt are the two behavior features; over-tilting is the crash failure.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>

#include "acord/envs/step.hpp"

namespace acord {

struct CruiseParams {
  double dt = 0.1;
  double v_max = 1.0;
  double accel_max = 1.0;
  double tilt_rate_max = 1.0;
  double tilt_max = 1.0;
  double crash_reward = -100.0;
  std::size_t episode_cap = 200;
};

struct CruiseState {
  double x_position = 0.0;
  double y_offset = 0.0;
  double v_x = 0.0;
  double tilt = 0.0;

  bool operator==(const CruiseState&) const = default;
};

inline constexpr std::size_t kCruiseSpeed = 0;
inline constexpr std::size_t kCruiseTilt = 1;
inline constexpr std::size_t kCruiseObservationSize = 2;

/// action = (accel, tilt_rate), clipped to the configured bounds.
inline StepResult<CruiseState> cruise_step(const CruiseState& state, const std::array<double, 2>& action,
                                           const CruiseParams& p) {
  const double accel = std::clamp(action[0], -p.accel_max, p.accel_max);
  const double tilt_rate = std::clamp(action[1], -p.tilt_rate_max, p.tilt_rate_max);

  StepResult<CruiseState> r;
  CruiseState& s = r.next_state;
  s = state;
  s.v_x = std::clamp(state.v_x + accel * p.dt, -p.v_max, p.v_max);
  s.tilt = state.tilt + tilt_rate * p.dt;
  s.x_position = state.x_position + s.v_x * p.dt;
  s.y_offset = state.y_offset + s.v_x * std::sin(s.tilt) * p.dt;
  r.progress_h = s.v_x;

  if (std::abs(s.tilt) > p.tilt_max) {
    r.failed = true;
    r.terminated = true;
    r.env_reward = p.crash_reward;
  } else {
    r.env_reward = s.v_x * p.dt;
  }
  return r;
}

inline Eigen::VectorXd cruise_observation(const CruiseState& s) {
  Eigen::VectorXd o(kCruiseObservationSize);
  o[kCruiseSpeed] = s.v_x;
  o[kCruiseTilt] = s.tilt;
  return o;
}

}  // namespace acord
