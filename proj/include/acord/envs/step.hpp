#pragma once

namespace acord {

/// Outcome of one environment tick. failed implies terminated.
template <typename State>
struct StepResult {
  State next_state{};
  double env_reward = 0.0;
  bool terminated = false;
  bool failed = false;
  double progress_h = 0.0;
};

/// StepResult without the concrete state, as seen by the trainer.
struct TaskStep {
  double env_reward = 0.0;
  bool terminated = false;
  bool failed = false;
  double progress_h = 0.0;

  bool succeeded() const { return terminated && !failed; }
};

template <typename State>
TaskStep to_task_step(const StepResult<State>& r) {
  return {r.env_reward, r.terminated, r.failed, r.progress_h};
}

}  // namespace acord
