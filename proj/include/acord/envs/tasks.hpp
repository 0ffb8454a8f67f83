#pragma once

// Adapters presenting the environments to the trainer through one interface:
//
//   observation_size(), action_size(), episode_cap(), failure_reward()
//   reset(rng), observe(), step(normalized action in [-1,1]^A) -> TaskStep

#include <Eigen/Core>

#include <array>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "acord/envs/cruise.hpp"
#include "acord/envs/painter.hpp"

namespace acord {

class CruiseTask {
 public:
  struct Options {
    double reset_speed_max = 0.1;
    double reset_tilt_max = 0.05;
  };

  explicit CruiseTask(CruiseParams params = {}) : CruiseTask(params, Options{}) {}
  CruiseTask(CruiseParams params, Options options) : params_(params), options_(options) {}

  std::size_t observation_size() const { return kCruiseObservationSize; }
  std::size_t action_size() const { return 2; }
  std::size_t episode_cap() const { return params_.episode_cap; }
  double failure_reward() const { return params_.crash_reward; }

  /// Speeds compatible with forward progress: (0, v_max].
  double feasible_speed_range() const { return params_.v_max; }

  template <typename Rng>
  void reset(Rng& rng) {
    std::uniform_real_distribution<double> speed(0.0, options_.reset_speed_max);
    std::uniform_real_distribution<double> tilt(-options_.reset_tilt_max, options_.reset_tilt_max);
    state_ = CruiseState{};
    state_.v_x = speed(rng);
    state_.tilt = tilt(rng);
  }

  Eigen::VectorXd observe() const { return cruise_observation(state_); }

  TaskStep step(std::span<const double> action) {
    const std::array<double, 2> a{action[0] * params_.accel_max, action[1] * params_.tilt_rate_max};
    auto r = cruise_step(state_, a, params_);
    state_ = r.next_state;
    return to_task_step(r);
  }

  const CruiseState& state() const { return state_; }
  const CruiseParams& params() const { return params_; }

 private:
  CruiseParams params_;
  Options options_;
  CruiseState state_;
};

class PainterTask {
 public:
  struct Options {
    bool randomize_start = true;  // random initial tip height and pitch
    bool random_shape = false;    // otherwise shapes rotate round-robin
  };

  PainterTask(std::vector<Shape> shapes, PainterParams params = {}) : PainterTask(std::move(shapes), params, Options{}) {}
  PainterTask(std::vector<Shape> shapes, PainterParams params, Options options)
      : shapes_(std::move(shapes)), params_(params), options_(options) {
    if (shapes_.empty()) throw ConfigError("painter task needs at least one shape");
    for (const auto& s : shapes_) s.validate(params_.x_min, params_.x_max, params_.y_min, params_.y_max);
    state_ = painter_reset(shapes_.front(), params_);
  }

  std::size_t observation_size() const { return kPainterObservationSize; }
  std::size_t action_size() const { return 4; }
  std::size_t episode_cap() const { return params_.step_cap; }
  double failure_reward() const { return params_.failure_penalty; }

  template <typename Rng>
  void reset(Rng& rng) {
    if (options_.random_shape) {
      std::uniform_int_distribution<std::size_t> pick(0, shapes_.size() - 1);
      current_ = pick(rng);
    } else if (started_) {
      current_ = (current_ + 1) % shapes_.size();
    }
    started_ = true;
    if (options_.randomize_start) {
      std::uniform_real_distribution<double> height(0.0, params_.z_max);
      std::uniform_real_distribution<double> pitch(-params_.pitch_max, params_.pitch_max);
      const double h = height(rng);
      const double th = pitch(rng);
      state_ = painter_reset(shape(), params_, h, th);
    } else {
      state_ = painter_reset(shape(), params_);
    }
  }

  /// Starts the next episode on a specific shape with the default tip pose.
  void reset_to(std::size_t shape_index) {
    current_ = shape_index % shapes_.size();
    started_ = true;
    state_ = painter_reset(shape(), params_);
  }

  Eigen::VectorXd observe() const { return painter_observation(state_, shape(), params_); }

  TaskStep step(std::span<const double> action) {
    auto r = painter_step(state_, PainterAction::from_normalized(action, params_), shape(), params_);
    state_ = r.next_state;
    return to_task_step(r);
  }

  const PainterState& state() const { return state_; }
  const Shape& shape() const { return shapes_[current_]; }
  const std::vector<Shape>& shapes() const { return shapes_; }
  std::size_t shape_index() const { return current_; }
  const PainterParams& params() const { return params_; }

 private:
  std::vector<Shape> shapes_;
  PainterParams params_;
  Options options_;
  PainterState state_;
  std::size_t current_ = 0;
  bool started_ = false;
};

}  // namespace acord
