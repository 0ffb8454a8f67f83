#pragma once

// Waypoint-tracing painter. A rigid brush of fixed length hangs from the
// end-effector and pitches in the x-z plane; style features (height, pitch)
// are measured at the brush tip.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

#include "acord/envs/shape.hpp"
#include "acord/envs/step.hpp"

namespace acord {

struct PainterParams {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  double z_max = 0.1;       // brush-tip height range is [0, z_max]
  double z_contact = 0.05;  // bristles touch the paper at or below this height
  double w_max = 0.02;      // stroke half-width at full pressure
  double pitch_max = std::numbers::pi / 3.0;
  double brush_length = 0.02;
  double v_xy_max = 0.01;  // per step
  double v_z_max = 0.01;
  double v_pitch_max = 0.1;
  double waypoint_tolerance = 0.01;
  std::size_t step_cap = 2000;
  double failure_penalty = -100.0;

  /// Half-width of the painted band at brush-tip height z.
  double stroke_half_width(double z) const { return w_max * std::max(0.0, 1.0 - z / z_contact); }
};

struct PainterState {
  Eigen::Vector3d ee_position = Eigen::Vector3d::Zero();
  double ee_pitch = 0.0;
  Eigen::Vector3d ee_velocity = Eigen::Vector3d::Zero();
  Eigen::Vector2d brush_position = Eigen::Vector2d::Zero();  // brush tip, x-y
  double brush_height = 0.0;                                 // brush tip, z
  double brush_pitch = 0.0;
  std::size_t next_waypoint_index = 0;

  bool operator==(const PainterState&) const = default;
};

/// Relative Cartesian velocities; vz and v_pitch drive the style axes.
struct PainterAction {
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double v_pitch = 0.0;

  PainterAction clipped(const PainterParams& p) const {
    return {std::clamp(vx, -p.v_xy_max, p.v_xy_max), std::clamp(vy, -p.v_xy_max, p.v_xy_max),
            std::clamp(vz, -p.v_z_max, p.v_z_max), std::clamp(v_pitch, -p.v_pitch_max, p.v_pitch_max)};
  }

  /// Maps a normalized command in [-1,1]^4 to physical units.
  static PainterAction from_normalized(std::span<const double> a, const PainterParams& p) {
    auto c = [&](std::size_t i) { return i < a.size() ? std::clamp(a[i], -1.0, 1.0) : 0.0; };
    return {c(0) * p.v_xy_max, c(1) * p.v_xy_max, c(2) * p.v_z_max, c(3) * p.v_pitch_max};
  }

  bool operator==(const PainterAction&) const = default;
};

// Observation layout. Features are normalized so discriminators see O(1) inputs.
inline constexpr std::size_t kPainterHeight = 0;  // brush-tip height / z_max, in [0,1]
inline constexpr std::size_t kPainterPitch = 1;   // brush pitch / pitch_max, in [-1,1]
inline constexpr std::size_t kPainterObservationSize = 7;
inline constexpr double kPainterOffsetScale = 20.0;

/// Places the ee so the brush tip pose matches (x, y, height, pitch).
inline void place_brush_tip(PainterState& s, const Eigen::Vector2d& tip, double height, double pitch,
                            const PainterParams& p) {
  const double L = p.brush_length;
  s.ee_pitch = pitch;
  s.ee_position = {tip.x() - L * std::sin(pitch), tip.y(), height + L * std::cos(pitch)};
  s.brush_position = tip;
  s.brush_height = height;
  s.brush_pitch = pitch;
}

/// Tip pose from the ee pose. Keeps the tip height inside [0, z_max] by
/// moving the ee vertically.
inline void update_brush_tip(PainterState& s, const PainterParams& p) {
  const double L = p.brush_length;
  const double c = std::cos(s.ee_pitch);
  s.ee_position.z() = std::clamp(s.ee_position.z(), L * c, p.z_max + L * c);
  s.brush_position = {s.ee_position.x() + L * std::sin(s.ee_pitch), s.ee_position.y()};
  s.brush_height = s.ee_position.z() - L * c;
  s.brush_pitch = s.ee_pitch;
}

/// The tip starts on p_0, so the first target is p_1.
inline PainterState painter_reset(const Shape& shape, const PainterParams& p, double height, double pitch) {
  PainterState s;
  place_brush_tip(s, shape.waypoints.front(), std::clamp(height, 0.0, p.z_max),
                  std::clamp(pitch, -p.pitch_max, p.pitch_max), p);
  s.next_waypoint_index = std::min<std::size_t>(1, shape.last_index());
  return s;
}

/// Distance from q to the segment [a, b].
inline double segment_distance(const Eigen::Vector2d& q, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double f = len2 > 0.0 ? std::clamp((q - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + f * ab - q).norm();
}

inline PainterState painter_reset(const Shape& shape, const PainterParams& p) {
  return painter_reset(shape, p, p.z_contact, 0.0);
}

/// -||p_brush - p_i||
inline double painter_reward(const PainterState& s, const Shape& shape) {
  return -(s.brush_position - shape.waypoints.at(s.next_waypoint_index)).norm();
}

/// h(s,a) = (vx, vy) . (p_i - p_brush)
inline double painter_progress(const PainterState& s, const PainterAction& a, const Shape& shape) {
  const Eigen::Vector2d to_goal = shape.waypoints.at(s.next_waypoint_index) - s.brush_position;
  return a.vx * to_goal.x() + a.vy * to_goal.y();
}

inline bool painter_in_workspace(const PainterState& s, const PainterParams& p) {
  const auto& e = s.ee_position;
  return e.x() >= p.x_min && e.x() <= p.x_max && e.y() >= p.y_min && e.y() <= p.y_max;
}

inline StepResult<PainterState> painter_step(const PainterState& state, const PainterAction& action,
                                             const Shape& shape, const PainterParams& p) {
  const PainterAction a = action.clipped(p);
  StepResult<PainterState> r;
  r.progress_h = painter_progress(state, a, shape);

  PainterState s = state;
  s.ee_position += Eigen::Vector3d(a.vx, a.vy, a.vz);
  s.ee_pitch = std::clamp(s.ee_pitch + a.v_pitch, -p.pitch_max, p.pitch_max);
  update_brush_tip(s, p);
  s.ee_velocity = s.ee_position - state.ee_position;

  if (!painter_in_workspace(s, p)) {
    r.failed = true;
    r.terminated = true;
    r.env_reward = p.failure_penalty;
    r.next_state = s;
    return r;
  }

  const std::size_t last = shape.last_index();
  // The tip sweeps a segment during the tick; passing within tolerance counts.
  if (segment_distance(shape.waypoints[s.next_waypoint_index], state.brush_position, s.brush_position) <=
      p.waypoint_tolerance) {
    if (s.next_waypoint_index == last) {
      r.terminated = true;
    } else {
      ++s.next_waypoint_index;
    }
  }
  r.env_reward = painter_reward(s, shape);
  r.next_state = s;
  return r;
}

inline Eigen::VectorXd painter_observation(const PainterState& s, const Shape& shape, const PainterParams& p) {
  Eigen::VectorXd o(kPainterObservationSize);
  const Eigen::Vector2d to_goal = shape.waypoints.at(s.next_waypoint_index) - s.brush_position;
  const double dist = to_goal.norm();
  o[kPainterHeight] = s.brush_height / p.z_max;
  o[kPainterPitch] = s.brush_pitch / p.pitch_max;
  o[2] = dist > 0.0 ? to_goal.x() / dist : 0.0;
  o[3] = dist > 0.0 ? to_goal.y() / dist : 0.0;
  o[4] = std::min(dist * kPainterOffsetScale, 5.0);
  o[5] = s.ee_position.x();
  o[6] = s.ee_position.y();
  return o;
}

}  // namespace acord
