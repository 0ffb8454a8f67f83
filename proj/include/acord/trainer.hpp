#pragma once

// The training loop: k randomization, state augmentation, the three-branch
// reward, dual buffer writes and interleaved learner/discriminator updates.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "acord/checkpoint.hpp"
#include "acord/discriminator.hpp"
#include "acord/envs/step.hpp"
#include "acord/error.hpp"
#include "acord/kspace.hpp"
#include "acord/sac.hpp"

namespace acord {

struct AcordConfig {
  std::size_t resample_interval = 0;  // n; 0 means ceil(episode_cap / 2)
  double progress_penalty = 1.0;      // c
  double env_scale = 1.0;
  double progress_scale = 1.0;
  double diversity_scale = 1.0;
  std::size_t learner_interval = 1;        // z
  std::size_t discriminator_interval = 4;  // v
  std::size_t total_steps = 0;
  std::size_t warmup_steps = 1000;
  std::size_t checkpoint_interval = 0;  // 0: final checkpoint only
  std::size_t loss_log_interval = 100;
  // When false, reaching the task goal ends the episode but the learner still
  // bootstraps through it, so completing the task is never worth less than
  // continuing to collect diversity reward. Failures are always terminal.
  bool success_is_terminal = false;
  std::uint64_t seed = 0;

  std::size_t effective_resample_interval(std::size_t episode_cap) const {
    return resample_interval != 0 ? resample_interval : (episode_cap + 1) / 2;
  }

  /// Rejects configurations that break the sign separation of the reward:
  /// failure and no-progress rewards must be negative, diversity non-negative.
  void validate(std::size_t episode_cap, double failure_reward) const {
    if (effective_resample_interval(episode_cap) < 1) throw ConfigError("acord.resample_interval must be >= 1");
    if (!(progress_penalty > 0.0)) throw ConfigError("acord.progress_penalty (c) must be > 0");
    if (!(env_scale >= 0.0 && progress_scale >= 0.0 && diversity_scale >= 0.0)) {
      throw ConfigError("acord reward scales must be >= 0");
    }
    if (learner_interval < 1) throw ConfigError("acord.learner_interval (z) must be >= 1");
    if (discriminator_interval < 1) throw ConfigError("acord.discriminator_interval (v) must be >= 1");
    if (!(env_scale * failure_reward < 0.0)) {
      throw ConfigError("environment failure reward scaled by acord.env_scale must be negative");
    }
    if (loss_log_interval < 1) throw ConfigError("acord.loss_log_interval must be >= 1");
  }
};

enum class RewardBranch { failure, no_progress, diversity };

struct RewardOutcome {
  double reward = 0.0;
  RewardBranch branch = RewardBranch::diversity;
};

/// Branches in order: failure, then h <= 0, then the diversity term evaluated
/// on the post-step augmented state.
template <typename Scalar>
RewardOutcome acord_reward(const AugmentedState& next, const TaskStep& step,
                           const DiscriminatorSet<Scalar>& discriminators, const AcordConfig& cfg) {
  if (step.failed) return {cfg.env_scale * step.env_reward, RewardBranch::failure};
  if (step.progress_h <= 0.0) return {-cfg.progress_scale * cfg.progress_penalty, RewardBranch::no_progress};
  return {cfg.diversity_scale * discriminators.diversity_reward(next), RewardBranch::diversity};
}

/// A fresh uniform k on every multiple of the interval within an episode
/// (step 0 is the reset), otherwise nothing.
template <typename Rng>
std::optional<BehaviorOversightVector> resample_k(std::size_t interval, std::size_t step_in_episode, std::size_t m,
                                                  Rng& rng) {
  if (interval == 0) throw ConfigError("resample interval must be >= 1");
  if (step_in_episode % interval != 0) return std::nullopt;
  return sample_k(m, rng);
}

struct EpisodeRecord {
  std::size_t index = 0;
  std::size_t start_step = 0;
  std::size_t length = 0;
  double acord_return = 0.0;
  double env_return = 0.0;
  bool failed = false;
  bool succeeded = false;
  double mean_diversity = 0.0;  // over steps where the diversity branch fired
  std::vector<std::pair<std::size_t, BehaviorOversightVector>> k_schedule;  // (step in episode, k)
};

struct UpdateRecord {
  std::size_t step = 0;
  sac::LossSummary learner;
  std::vector<double> discriminator_losses;
};

struct TrainReport {
  std::vector<EpisodeRecord> episodes;
  std::vector<UpdateRecord> updates;
  std::uint64_t learner_transitions = 0;
  std::uint64_t discriminator_transitions = 0;
  std::size_t steps = 0;
};

using CheckpointSink = std::function<void(const Checkpoint&, std::string_view tag)>;

template <typename Task, typename Scalar = float>
class AcordTrainer {
 public:
  AcordTrainer(Task task, FeatureMap map, AcordConfig cfg, sac::SacConfig sac_cfg, DiscriminatorConfig disc_cfg)
      : task_(std::move(task)),
        map_(std::move(map)),
        cfg_(cfg),
        rng_(cfg.seed),
        env_dim_(task_.observation_size()),
        learner_(make_learner(sac_cfg)),
        discriminators_(make_discriminators(disc_cfg)),
        replay_(env_dim_ + map_.size(), task_.action_size(),
                std::max<std::size_t>(sac_cfg.batch_size, std::min(sac_cfg.replay_capacity, cfg.total_steps + 1))),
        disc_buffer_(env_dim_ + map_.size(), task_.action_size(),
                     std::max<std::size_t>(1, std::min(disc_cfg.capacity, cfg.total_steps + 1))) {
    map_.validate(env_dim_);
    cfg_.validate(task_.episode_cap(), task_.failure_reward());
  }

  Task& task() { return task_; }
  const FeatureMap& feature_map() const { return map_; }
  const AcordConfig& config() const { return cfg_; }
  sac::SoftActorCritic<Scalar>& learner() { return learner_; }
  const sac::SoftActorCritic<Scalar>& learner() const { return learner_; }
  DiscriminatorSet<Scalar>& discriminators() { return discriminators_; }
  const DiscriminatorSet<Scalar>& discriminators() const { return discriminators_; }
  const sac::ReplayBuffer<Scalar>& replay() const { return replay_; }
  const DiscriminatorBuffer& discriminator_buffer() const { return disc_buffer_; }
  std::size_t global_step() const { return global_step_; }
  const BehaviorOversightVector& current_k() const { return k_; }
  std::size_t env_dim() const { return env_dim_; }

  /// Optional per-transition observer: (s, a, s', reward outcome).
  using TransitionHook = std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&,
                                            const RewardOutcome&)>;
  void set_transition_hook(TransitionHook hook) { hook_ = std::move(hook); }

  /// Runs the configured number of environment steps.
  TrainReport train(const CheckpointSink& sink = {}) { return train(cfg_.total_steps, sink); }

  TrainReport train(std::size_t steps, const CheckpointSink& sink) {
    TrainReport report;
    const std::size_t n = cfg_.effective_resample_interval(task_.episode_cap());
    const std::size_t m = map_.size();
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    if (sink) sink(checkpoint(), "initial");

    for (std::size_t t = 0; t < steps; ++t) {
      if (!episode_active_) {
        task_.reset(rng_);
        episode_ = EpisodeRecord{};
        episode_.index = episodes_started_++;
        episode_.start_step = global_step_;
        episode_step_ = 0;
        diversity_sum_ = 0.0;
        diversity_count_ = 0;
        episode_active_ = true;
      }
      if (auto fresh = resample_k(n, episode_step_, m, rng_)) {
        k_ = std::move(*fresh);
        episode_.k_schedule.emplace_back(episode_step_, k_);
      }

      const Eigen::VectorXd s = augment_state(task_.observe(), k_, map_).flatten();
      Eigen::VectorXd a(static_cast<Eigen::Index>(task_.action_size()));
      if (global_step_ < cfg_.warmup_steps) {
        for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = uniform(rng_);
      } else {
        a = learner_.actor().act_normalized(s, sac::ActionMode::stochastic, rng_);
      }

      const TaskStep st = task_.step(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
      const AugmentedState next{task_.observe(), k_};
      const RewardOutcome reward = acord_reward(next, st, discriminators_, cfg_);
      const Eigen::VectorXd s2 = next.flatten();

      const bool terminal = st.failed || (st.terminated && cfg_.success_is_terminal);
      replay_.add(s, a, s2, reward.reward, terminal);
      disc_buffer_.add(s, a, s2, reward.reward);
      if (hook_) hook_(s, a, s2, reward);
      ++global_step_;
      ++episode_step_;

      std::optional<sac::LossSummary> learner_loss;
      if (global_step_ > cfg_.warmup_steps && global_step_ % cfg_.learner_interval == 0 &&
          replay_.size() >= learner_.config().batch_size) {
        learner_loss = learner_.update(replay_, rng_);
        if (!learner_loss->finite()) diverge(sink, "learner loss is not finite at step " + std::to_string(global_step_));
      }
      std::optional<std::vector<double>> disc_loss;
      if (global_step_ % cfg_.discriminator_interval == 0) {
        disc_loss = discriminators_.update(disc_buffer_, env_dim_, rng_);
        if (disc_loss) {
          for (double l : *disc_loss) {
            if (!std::isfinite(l)) diverge(sink, "discriminator loss is not finite at step " + std::to_string(global_step_));
          }
        }
      }
      if ((learner_loss || disc_loss) && global_step_ % cfg_.loss_log_interval == 0) {
        UpdateRecord u;
        u.step = global_step_;
        if (learner_loss) u.learner = *learner_loss;
        if (disc_loss) u.discriminator_losses = *disc_loss;
        report.updates.push_back(std::move(u));
      }

      episode_.acord_return += reward.reward;
      episode_.env_return += st.env_reward;
      if (reward.branch == RewardBranch::diversity) {
        diversity_sum_ += reward.reward;
        ++diversity_count_;
      }
      const bool truncated = !st.terminated && episode_step_ >= task_.episode_cap();
      if (st.terminated || truncated) {
        episode_.length = episode_step_;
        episode_.failed = st.failed;
        episode_.succeeded = st.succeeded();
        episode_.mean_diversity = diversity_count_ ? diversity_sum_ / static_cast<double>(diversity_count_) : 0.0;
        report.episodes.push_back(std::move(episode_));
        episode_active_ = false;
      }

      if (sink && cfg_.checkpoint_interval != 0 && global_step_ % cfg_.checkpoint_interval == 0) {
        sink(checkpoint(), "periodic");
      }
    }
    report.steps = steps;
    report.learner_transitions = replay_.total_added();
    report.discriminator_transitions = disc_buffer_.total_added();
    if (sink && steps > 0) sink(checkpoint(), "final");
    return report;
  }

  Checkpoint checkpoint() const {
    Checkpoint ck;
    ck.step = global_step_;
    learner_.save(ck);
    discriminators_.save(ck);
    return ck;
  }

  /// Restores network and optimizer state. Replay buffers start empty.
  void restore(const Checkpoint& ck) {
    learner_.load(ck);
    discriminators_.load(ck);
    global_step_ = static_cast<std::size_t>(ck.step);
    episode_active_ = false;
  }

 private:
  sac::SoftActorCritic<Scalar> make_learner(const sac::SacConfig& sac_cfg) {
    return sac::SoftActorCritic<Scalar>(env_dim_ + map_.size(), task_.action_size(), sac_cfg, rng_);
  }

  DiscriminatorSet<Scalar> make_discriminators(const DiscriminatorConfig& disc_cfg) {
    return DiscriminatorSet<Scalar>(map_, disc_cfg, rng_);
  }

  [[noreturn]] void diverge(const CheckpointSink& sink, const std::string& what) {
    if (sink) sink(checkpoint(), "diverged");
    throw TrainingDiverged(what);
  }

  Task task_;
  FeatureMap map_;
  AcordConfig cfg_;
  std::mt19937_64 rng_;
  std::size_t env_dim_;
  sac::SoftActorCritic<Scalar> learner_;
  DiscriminatorSet<Scalar> discriminators_;
  sac::ReplayBuffer<Scalar> replay_;
  DiscriminatorBuffer disc_buffer_;
  TransitionHook hook_;

  BehaviorOversightVector k_;
  EpisodeRecord episode_;
  bool episode_active_ = false;
  std::size_t episode_step_ = 0;
  std::size_t episodes_started_ = 0;
  std::size_t global_step_ = 0;
  double diversity_sum_ = 0.0;
  std::size_t diversity_count_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation

/// How k evolves during an evaluation episode.
class KSchedule {
 public:
  struct Fixed {
    BehaviorOversightVector k;
  };
  struct Stepwise {
    std::vector<std::pair<std::size_t, BehaviorOversightVector>> changes;  // (step in episode, k), sorted
  };
  struct Random {
    std::size_t interval;
  };

  static KSchedule fixed(BehaviorOversightVector k) { return KSchedule(Fixed{std::move(k)}); }
  static KSchedule stepwise(std::vector<std::pair<std::size_t, BehaviorOversightVector>> changes) {
    if (changes.empty() || changes.front().first != 0) throw ConfigError("stepwise k schedule must start at step 0");
    return KSchedule(Stepwise{std::move(changes)});
  }
  static KSchedule random(std::size_t interval) {
    if (interval == 0) throw ConfigError("random k schedule interval must be >= 1");
    return KSchedule(Random{interval});
  }

  /// The k to use at this step, or nothing to keep the current one.
  template <typename Rng>
  std::optional<BehaviorOversightVector> at(std::size_t step_in_episode, std::size_t m, Rng& rng) const {
    if (const auto* f = std::get_if<Fixed>(&kind_)) {
      if (step_in_episode == 0) return f->k;
      return std::nullopt;
    }
    if (const auto* s = std::get_if<Stepwise>(&kind_)) {
      for (const auto& [step, k] : s->changes) {
        if (step == step_in_episode) return k;
      }
      return std::nullopt;
    }
    return resample_k(std::get<Random>(kind_).interval, step_in_episode, m, rng);
  }

 private:
  using Kind = std::variant<Fixed, Stepwise, Random>;
  explicit KSchedule(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// One deterministic rollout's per-feature statistics.
struct EpisodeTrace {
  std::size_t length = 0;
  bool failed = false;
  bool succeeded = false;
  double env_return = 0.0;
  std::vector<double> mean_features;  // per feature, averaged over post-step states
  std::vector<std::pair<std::vector<double>, BehaviorOversightVector>> samples;  // (features, k) per step
};

template <typename Task, typename Scalar, typename Rng>
EpisodeTrace rollout_episode(Task& task, const sac::ActorPolicy<Scalar>& actor, const FeatureMap& map,
                             const KSchedule& schedule, Rng& rng, bool keep_samples = false) {
  EpisodeTrace trace;
  task.reset(rng);
  BehaviorOversightVector k;
  trace.mean_features.assign(map.size(), 0.0);
  for (std::size_t step = 0; step < task.episode_cap(); ++step) {
    if (auto next = schedule.at(step, map.size(), rng)) k = std::move(*next);
    const Eigen::VectorXd s = augment_state(task.observe(), k, map).flatten();
    const Eigen::VectorXd a = actor.act_deterministic(s);
    const TaskStep st = task.step(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
    const AugmentedState post{task.observe(), k};
    const auto features = extract_features(post, map);
    for (std::size_t j = 0; j < features.size(); ++j) trace.mean_features[j] += features[j];
    if (keep_samples) trace.samples.emplace_back(features, k);
    trace.env_return += st.env_reward;
    ++trace.length;
    if (st.terminated) {
      trace.failed = st.failed;
      trace.succeeded = st.succeeded();
      break;
    }
  }
  for (auto& f : trace.mean_features) f /= static_cast<double>(std::max<std::size_t>(1, trace.length));
  return trace;
}

struct FeatureBin {
  double k_low = 0.0;
  double k_high = 0.0;
  std::size_t count = 0;
  double mean_feature = 0.0;
};

struct EvalSummary {
  std::size_t episodes = 0;
  double failure_rate = 0.0;
  double success_rate = 0.0;
  std::vector<double> returns;
  std::vector<std::size_t> lengths;
  std::vector<std::vector<double>> mean_features;  // per episode, per feature
  std::vector<std::vector<FeatureBin>> feature_bins;  // per feature: achieved value by k_j bin
};

/// Deterministic-mode rollouts under a k schedule.
template <typename Task, typename Scalar>
EvalSummary evaluate_policy(Task& task, const sac::ActorPolicy<Scalar>& actor, const FeatureMap& map,
                            const KSchedule& schedule, std::size_t episodes, std::uint64_t seed,
                            std::size_t bins = 5) {
  std::mt19937_64 rng(seed);
  EvalSummary summary;
  summary.episodes = episodes;
  summary.feature_bins.assign(map.size(), std::vector<FeatureBin>(bins));
  std::vector<std::vector<double>> sums(map.size(), std::vector<double>(bins, 0.0));
  for (std::size_t j = 0; j < map.size(); ++j) {
    for (std::size_t b = 0; b < bins; ++b) {
      summary.feature_bins[j][b].k_low = static_cast<double>(b) / static_cast<double>(bins);
      summary.feature_bins[j][b].k_high = static_cast<double>(b + 1) / static_cast<double>(bins);
    }
  }
  std::size_t failures = 0;
  std::size_t successes = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto trace = rollout_episode(task, actor, map, schedule, rng, true);
    failures += trace.failed ? 1 : 0;
    successes += trace.succeeded ? 1 : 0;
    summary.returns.push_back(trace.env_return);
    summary.lengths.push_back(trace.length);
    summary.mean_features.push_back(trace.mean_features);
    for (const auto& [features, k] : trace.samples) {
      for (std::size_t j = 0; j < map.size(); ++j) {
        const auto b = std::min(bins - 1, static_cast<std::size_t>(k[j] * static_cast<double>(bins)));
        sums[j][b] += features[j];
        ++summary.feature_bins[j][b].count;
      }
    }
  }
  for (std::size_t j = 0; j < map.size(); ++j) {
    for (std::size_t b = 0; b < bins; ++b) {
      auto& bin = summary.feature_bins[j][b];
      bin.mean_feature = bin.count ? sums[j][b] / static_cast<double>(bin.count) : 0.0;
    }
  }
  if (episodes) {
    summary.failure_rate = static_cast<double>(failures) / static_cast<double>(episodes);
    summary.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
  }
  return summary;
}

}  // namespace acord
