#pragma once

// Comparison controllers for the painter: a fixed library of six styles and a
// shared-autonomy controller that infers which style the user is steering to.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "acord/envs/painter.hpp"
#include "acord/envs/shape.hpp"
#include "acord/error.hpp"

namespace acord {

struct Style {
  double height = 0.0;  // brush-tip z
  double pitch = 0.0;   // radians
  std::string label;
  std::string thumbnail;
};

inline constexpr std::size_t kStyleCount = 6;

class StyleLibrary {
 public:
  StyleLibrary() : StyleLibrary(default_styles()) {}
  explicit StyleLibrary(std::vector<Style> styles) : styles_(std::move(styles)) {
    if (styles_.size() != kStyleCount) {
      throw ConfigError("style library needs exactly " + std::to_string(kStyleCount) + " entries, got " +
                        std::to_string(styles_.size()));
    }
  }

  /// Heights {contact, mid} crossed with pitches {-30, 0, +30} degrees.
  static std::vector<Style> default_styles(const PainterParams& p = {}) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double heights[] = {0.0, p.z_contact / 2.0};
    const char* height_names[] = {"contact", "mid"};
    const double pitches[] = {-30.0, 0.0, 30.0};
    std::vector<Style> out;
    for (int h = 0; h < 2; ++h) {
      for (int q = 0; q < 3; ++q) {
        Style s;
        s.height = heights[h];
        s.pitch = pitches[q] * deg;
        s.label = std::string(height_names[h]) + "/" + std::to_string(static_cast<int>(pitches[q])) + "deg";
        s.thumbnail = "style" + std::to_string(out.size());
        out.push_back(std::move(s));
      }
    }
    return out;
  }

  void validate(const PainterParams& p) const {
    for (const auto& s : styles_) {
      if (s.height < 0.0 || s.height > p.z_max) throw ConfigError("style '" + s.label + "' height is out of range");
      if (std::abs(s.pitch) > p.pitch_max) throw ConfigError("style '" + s.label + "' pitch is out of range");
    }
  }

  std::size_t size() const { return styles_.size(); }
  const Style& operator[](std::size_t i) const { return styles_[i]; }
  const Style& at(std::size_t i) const {
    if (i >= styles_.size()) {
      throw RequestError("style index " + std::to_string(i) + " out of range (library has " +
                         std::to_string(styles_.size()) + ")");
    }
    return styles_[i];
  }
  const std::vector<Style>& styles() const { return styles_; }

 private:
  std::vector<Style> styles_;
};

/// Tip displacement toward the next waypoint, speed-capped.
inline Eigen::Vector2d waypoint_velocity(const PainterState& s, const Shape& shape, const PainterParams& p) {
  Eigen::Vector2d d = shape.waypoints.at(s.next_waypoint_index) - s.brush_position;
  const double n = d.norm();
  if (n > p.v_xy_max) d *= p.v_xy_max / n;
  return d;
}

/// Converts desired tip motion into an ee command, compensating for the tip
/// shift a pitch change causes. Results are clipped to the action bounds.
inline PainterAction tip_motion_to_action(const PainterState& s, const Eigen::Vector2d& tip_xy, double tip_dz,
                                          double d_pitch, const PainterParams& p) {
  d_pitch = std::clamp(d_pitch, -p.v_pitch_max, p.v_pitch_max);
  const double next_pitch = std::clamp(s.ee_pitch + d_pitch, -p.pitch_max, p.pitch_max);
  const double L = p.brush_length;
  const double dx_pitch = L * (std::sin(next_pitch) - std::sin(s.ee_pitch));
  const double dz_pitch = -L * (std::cos(next_pitch) - std::cos(s.ee_pitch));
  return PainterAction{tip_xy.x() - dx_pitch, tip_xy.y(), tip_dz - dz_pitch, next_pitch - s.ee_pitch}.clipped(p);
}

/// Tracks the shape along x-y while regulating height and pitch to the style.
inline PainterAction fixed_style_policy(const Style& style, const PainterState& s, const Shape& shape,
                                        const PainterParams& p) {
  const Eigen::Vector2d xy = waypoint_velocity(s, shape, p);
  const double dz = std::clamp(style.height - s.brush_height, -p.v_z_max, p.v_z_max);
  const double dp = std::clamp(style.pitch - s.brush_pitch, -p.v_pitch_max, p.v_pitch_max);
  return tip_motion_to_action(s, xy, dz, dp, p);
}

// ---------------------------------------------------------------------------
// Shared autonomy

/// Normalized command over (vz, v_pitch), each in [-1, 1].
using UserCommand = std::array<double, 2>;

inline UserCommand clip_command(UserCommand u) {
  for (auto& c : u) c = std::isfinite(c) ? std::clamp(c, -1.0, 1.0) : 0.0;
  return u;
}

struct SAParams {
  double alpha = 0.5;  // assistance weight
  double beta = 5.0;   // rationality
  double gain = 4.0;   // proportional gain on normalized height/pitch error

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("sa.alpha must be in [0,1]");
    if (!(beta >= 0.0)) throw ConfigError("sa.beta must be >= 0");
    if (!(gain > 0.0)) throw ConfigError("sa.gain must be > 0");
  }
};

class SABelief {
 public:
  SABelief() : SABelief(kStyleCount) {}
  explicit SABelief(std::size_t goals) : p_(goals, 1.0 / static_cast<double>(goals)) {
    if (goals == 0) throw ConfigError("belief needs at least one goal");
  }
  explicit SABelief(std::vector<double> probabilities) : p_(std::move(probabilities)) {
    const double total = std::accumulate(p_.begin(), p_.end(), 0.0);
    if (p_.empty() || !(total > 0.0) || std::any_of(p_.begin(), p_.end(), [](double v) { return !(v >= 0.0); })) {
      throw ConfigError("belief must be non-negative with positive mass");
    }
    for (auto& v : p_) v /= total;
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& probabilities() const { return p_; }
  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(p_.begin(), p_.end()) - p_.begin());
  }

 private:
  std::vector<double> p_;
};

/// Proportional command toward a (height, pitch) target, normalized.
inline UserCommand goal_command(double height, double pitch, const PainterState& s, const PainterParams& p,
                                double gain) {
  return clip_command({gain * (height - s.brush_height) / p.z_max, gain * (pitch - s.brush_pitch) / p.pitch_max});
}

inline UserCommand goal_command(const Style& g, const PainterState& s, const PainterParams& p, double gain) {
  return goal_command(g.height, g.pitch, s, p, gain);
}

/// Bayes update with P(u | g) proportional to exp(-beta * |u - u*_g|^2).
inline SABelief sa_update_belief(const SABelief& belief, const UserCommand& u, const PainterState& s,
                                 const StyleLibrary& library, const PainterParams& p, const SAParams& sa) {
  if (belief.size() != library.size()) throw ConfigError("belief and style library sizes differ");
  const UserCommand uc = clip_command(u);
  std::vector<double> cost(library.size());
  for (std::size_t g = 0; g < library.size(); ++g) {
    const UserCommand target = goal_command(library[g], s, p, sa.gain);
    const double d0 = uc[0] - target[0];
    const double d1 = uc[1] - target[1];
    cost[g] = sa.beta * (d0 * d0 + d1 * d1);
  }
  // Shift by the smallest cost so the best goal's likelihood is exactly 1.
  const double lowest = *std::min_element(cost.begin(), cost.end());
  std::vector<double> post(library.size());
  double total = 0.0;
  for (std::size_t g = 0; g < library.size(); ++g) {
    post[g] = belief[g] * std::exp(-(cost[g] - lowest));
    total += post[g];
  }
  if (!(total > 0.0) || !std::isfinite(total)) return belief;
  return SABelief(std::move(post));
}

/// Assistance toward the belief-weighted (height, pitch).
inline UserCommand sa_assist(const SABelief& belief, const PainterState& s, const StyleLibrary& library,
                             const PainterParams& p, const SAParams& sa) {
  double height = 0.0;
  double pitch = 0.0;
  for (std::size_t g = 0; g < library.size(); ++g) {
    height += belief[g] * library[g].height;
    pitch += belief[g] * library[g].pitch;
  }
  return goal_command(height, pitch, s, p, sa.gain);
}

/// alpha * assist + (1 - alpha) * u, then clipped.
inline UserCommand sa_blend(const UserCommand& u, const UserCommand& assist, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("blend weight must be in [0,1]");
  return clip_command({alpha * assist[0] + (1.0 - alpha) * u[0], alpha * assist[1] + (1.0 - alpha) * u[1]});
}

/// Full painter action for the shared-autonomy condition: x-y always follows
/// the waypoint controller; height and pitch follow the blended command.
inline PainterAction sa_action(const UserCommand& blended, const PainterState& s, const Shape& shape,
                               const PainterParams& p) {
  const Eigen::Vector2d xy = waypoint_velocity(s, shape, p);
  return tip_motion_to_action(s, xy, blended[0] * p.v_z_max, blended[1] * p.v_pitch_max, p);
}

}  // namespace acord
