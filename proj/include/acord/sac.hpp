#pragma once

// Maximum-entropy off-policy actor-critic: squashed-Gaussian actor, twin
// critics with soft-updated targets, learned temperature.
//
// The actor and critics work in normalized action space [-1,1]^A; ActorPolicy
// rescales to per-axis bounds on the way out.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "acord/checkpoint.hpp"
#include "acord/error.hpp"
#include "acord/funcapprox.hpp"

namespace acord::sac {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;

struct SacConfig {
  std::vector<int> hidden{256, 256};
  double gamma = 0.99;
  double tau = 0.005;
  double lr = 3e-4;
  std::size_t batch_size = 256;
  std::size_t replay_capacity = 1'000'000;
  double initial_temperature = 1.0;
  std::optional<double> target_entropy;  // defaults to -(action dimension)
  bool learn_temperature = true;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("sac.gamma must be in [0,1]");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("sac.tau must be in (0,1]");
    if (!(lr >= 0.0)) throw ConfigError("sac.lr must be >= 0");
    if (batch_size < 1) throw ConfigError("sac.batch_size must be >= 1");
    if (replay_capacity < batch_size) throw ConfigError("sac.replay_capacity must be >= batch_size");
    if (!(initial_temperature > 0.0)) throw ConfigError("sac.initial_temperature must be > 0");
    if (hidden.empty()) throw ConfigError("sac.hidden needs at least one layer");
  }
};

template <typename Scalar>
struct Batch {
  fa::Mat<Scalar> states;
  fa::Mat<Scalar> actions;
  fa::Mat<Scalar> next_states;
  fa::Vec<Scalar> rewards;
  fa::Vec<Scalar> terminals;  // 1 where the episode truly ended (no bootstrap)

  Eigen::Index size() const { return rewards.size(); }
};

/// Ring buffer of (s, a, s', r, terminal). Uniform sampling with replacement.
template <typename Scalar>
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t obs_dim, std::size_t act_dim, std::size_t capacity)
      : states_(static_cast<Eigen::Index>(obs_dim), static_cast<Eigen::Index>(capacity)),
        actions_(static_cast<Eigen::Index>(act_dim), static_cast<Eigen::Index>(capacity)),
        next_states_(static_cast<Eigen::Index>(obs_dim), static_cast<Eigen::Index>(capacity)),
        rewards_(static_cast<Eigen::Index>(capacity)),
        terminals_(static_cast<Eigen::Index>(capacity)),
        capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
  }

  void add(const Eigen::VectorXd& s, const Eigen::VectorXd& a, const Eigen::VectorXd& s2, double r, bool terminal) {
    if (s.size() != states_.rows() || s2.size() != states_.rows() || a.size() != actions_.rows()) {
      throw ConfigError("replay buffer: transition dimension mismatch");
    }
    const auto c = static_cast<Eigen::Index>(cursor_);
    states_.col(c) = s.cast<Scalar>();
    actions_.col(c) = a.cast<Scalar>();
    next_states_.col(c) = s2.cast<Scalar>();
    rewards_[c] = static_cast<Scalar>(r);
    terminals_[c] = terminal ? Scalar(1) : Scalar(0);
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
    ++total_added_;
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_added() const { return total_added_; }

  /// Stored reward by age: 0 is the oldest transition still held.
  double reward_by_age(std::size_t age) const {
    const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
    return static_cast<double>(rewards_[static_cast<Eigen::Index>((oldest + age) % capacity_)]);
  }

  Batch<Scalar> gather(const std::vector<std::size_t>& slots) const {
    Batch<Scalar> b;
    const auto n = static_cast<Eigen::Index>(slots.size());
    b.states.resize(states_.rows(), n);
    b.actions.resize(actions_.rows(), n);
    b.next_states.resize(next_states_.rows(), n);
    b.rewards.resize(n);
    b.terminals.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = static_cast<Eigen::Index>(slots[static_cast<std::size_t>(i)]);
      b.states.col(i) = states_.col(c);
      b.actions.col(i) = actions_.col(c);
      b.next_states.col(i) = next_states_.col(c);
      b.rewards[i] = rewards_[c];
      b.terminals[i] = terminals_[c];
    }
    return b;
  }

  template <typename Rng>
  Batch<Scalar> sample(std::size_t n, Rng& rng) const {
    if (size_ == 0) throw ConfigError("cannot sample an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    std::vector<std::size_t> slots(n);
    for (auto& s : slots) s = pick(rng);
    return gather(slots);
  }

 private:
  fa::Mat<Scalar> states_;
  fa::Mat<Scalar> actions_;
  fa::Mat<Scalar> next_states_;
  fa::Vec<Scalar> rewards_;
  fa::Vec<Scalar> terminals_;
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::uint64_t total_added_ = 0;
};

enum class ActionMode { stochastic, deterministic };

template <typename Scalar, typename Rng>
fa::Mat<Scalar> gaussian_noise(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  fa::Mat<Scalar> out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = static_cast<Scalar>(normal(rng));
  }
  return out;
}

/// Squashed-Gaussian policy. The network emits per-dimension mean and raw
/// log-std; log-std is clamped to [kLogStdMin, kLogStdMax].
template <typename Scalar>
class ActorPolicy {
 public:
  using VecT = fa::Vec<Scalar>;
  using MatT = fa::Mat<Scalar>;

  struct Sample {
    MatT action;  // tanh-squashed, in [-1,1]
    VecT log_prob;
    MatT pre_tanh;
    MatT mean;
    MatT raw_log_std;
    MatT std;
    MatT noise;
    fa::Tape<Scalar> tape;
  };

  ActorPolicy() = default;

  ActorPolicy(fa::Mlp<Scalar> net, std::size_t action_dim) : net_(std::move(net)), action_dim_(action_dim) {
    if (static_cast<std::size_t>(net_.spec().output_size()) != 2 * action_dim_) {
      throw ConfigError("actor network must output mean and log-std per action dimension");
    }
    low_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(action_dim_), -1.0);
    high_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(action_dim_), 1.0);
  }

  static fa::MlpSpec make_spec(std::size_t obs_dim, std::size_t action_dim, const std::vector<int>& hidden) {
    fa::MlpSpec spec;
    spec.layer_sizes.push_back(static_cast<int>(obs_dim));
    spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
    spec.layer_sizes.push_back(static_cast<int>(2 * action_dim));
    return spec;
  }

  template <typename Rng>
  static ActorPolicy initialized(std::size_t obs_dim, std::size_t action_dim, const std::vector<int>& hidden,
                                 Rng& rng) {
    return ActorPolicy(fa::Mlp<Scalar>::initialized(make_spec(obs_dim, action_dim, hidden), rng), action_dim);
  }

  void set_bounds(Eigen::VectorXd low, Eigen::VectorXd high) {
    if (low.size() != high.size() || static_cast<std::size_t>(low.size()) != action_dim_) {
      throw ConfigError("action bounds must match the action dimension");
    }
    for (Eigen::Index i = 0; i < low.size(); ++i) {
      if (!(low[i] < high[i])) throw ConfigError("action bounds must satisfy low < high");
    }
    low_ = std::move(low);
    high_ = std::move(high);
  }

  std::size_t action_dim() const { return action_dim_; }
  std::size_t observation_dim() const { return static_cast<std::size_t>(net_.spec().input_size()); }
  fa::Mlp<Scalar>& net() { return net_; }
  const fa::Mlp<Scalar>& net() const { return net_; }
  const Eigen::VectorXd& low() const { return low_; }
  const Eigen::VectorXd& high() const { return high_; }

  /// Reparameterized sample: action = tanh(mean + std * noise). Zero noise gives the deterministic action.
  Sample sample(const MatT& states, const MatT& noise) const {
    Sample s;
    const auto A = static_cast<Eigen::Index>(action_dim_);
    const MatT out = net_.forward(states, s.tape);
    s.mean = out.topRows(A);
    s.raw_log_std = out.bottomRows(A);
    const MatT log_std = s.raw_log_std.cwiseMax(Scalar(kLogStdMin)).cwiseMin(Scalar(kLogStdMax));
    s.std = log_std.array().exp().matrix();
    s.noise = noise;
    s.pre_tanh = s.mean + s.std.cwiseProduct(noise);
    s.action = s.pre_tanh.array().tanh().matrix();
    const Scalar half_log_2pi = Scalar(0.5 * std::log(2.0 * std::numbers::pi));
    const MatT per_dim = (Scalar(-0.5) * noise.array().square() - log_std.array() - half_log_2pi -
                          (Scalar(1) - s.action.array().square() + Scalar(kSquashEps)).log())
                             .matrix();
    s.log_prob = per_dim.colwise().sum().transpose();
    return s;
  }

  /// Normalized action in [-1,1]^A for one observation.
  template <typename Rng>
  Eigen::VectorXd act_normalized(const Eigen::VectorXd& state, ActionMode mode, Rng& rng) const {
    if (static_cast<std::size_t>(state.size()) != observation_dim()) {
      throw ConfigError("select_action: state has " + std::to_string(state.size()) + " entries, policy expects " +
                        std::to_string(observation_dim()));
    }
    const auto A = static_cast<Eigen::Index>(action_dim_);
    const MatT input = state.cast<Scalar>();
    if (mode == ActionMode::deterministic) {
      const MatT out = net_.forward(input);
      return out.topRows(A).array().tanh().matrix().template cast<double>().col(0);
    }
    const MatT noise = gaussian_noise<Scalar>(A, 1, rng);
    return sample(input, noise).action.template cast<double>().col(0);
  }

  /// Deterministic action, no randomness consumed.
  Eigen::VectorXd act_deterministic(const Eigen::VectorXd& state) const {
    std::mt19937_64 unused(0);
    return act_normalized(state, ActionMode::deterministic, unused);
  }

  /// Action rescaled to the per-axis bounds.
  template <typename Rng>
  Eigen::VectorXd select_action(const Eigen::VectorXd& state, ActionMode mode, Rng& rng) const {
    return to_bounds(act_normalized(state, mode, rng));
  }

  Eigen::VectorXd to_bounds(const Eigen::VectorXd& normalized) const {
    return low_ + ((normalized.array() + 1.0) * 0.5 * (high_ - low_).array()).matrix();
  }

 private:
  fa::Mlp<Scalar> net_;
  std::size_t action_dim_ = 0;
  Eigen::VectorXd low_;
  Eigen::VectorXd high_;
};

/// Two online action-value networks and their exponential-moving-average targets.
template <typename Scalar>
struct CriticPair {
  fa::Mlp<Scalar> q1;
  fa::Mlp<Scalar> q2;
  fa::Mlp<Scalar> q1_target;
  fa::Mlp<Scalar> q2_target;

  static fa::MlpSpec make_spec(std::size_t obs_dim, std::size_t action_dim, const std::vector<int>& hidden) {
    fa::MlpSpec spec;
    spec.layer_sizes.push_back(static_cast<int>(obs_dim + action_dim));
    spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
    spec.layer_sizes.push_back(1);
    return spec;
  }

  template <typename Rng>
  static CriticPair initialized(std::size_t obs_dim, std::size_t action_dim, const std::vector<int>& hidden, Rng& rng) {
    const auto spec = make_spec(obs_dim, action_dim, hidden);
    CriticPair c;
    c.q1 = fa::Mlp<Scalar>::initialized(spec, rng);
    c.q2 = fa::Mlp<Scalar>::initialized(spec, rng);
    c.q1_target = c.q1;
    c.q2_target = c.q2;
    return c;
  }

  void soft_update(double tau) {
    const auto t = static_cast<Scalar>(tau);
    q1_target.params() = t * q1.params() + (Scalar(1) - t) * q1_target.params();
    q2_target.params() = t * q2.params() + (Scalar(1) - t) * q2_target.params();
  }
};

template <typename Scalar>
fa::Mat<Scalar> stack(const fa::Mat<Scalar>& top, const fa::Mat<Scalar>& bottom) {
  fa::Mat<Scalar> out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

template <typename Scalar>
struct SoftTargets {
  fa::Vec<Scalar> y;
  fa::Vec<Scalar> q1_target;
  fa::Vec<Scalar> q2_target;
  fa::Vec<Scalar> min_target;
  fa::Vec<Scalar> next_log_prob;
};

/// y = r + gamma (1 - terminal) (min(Q1', Q2')(s', a') - alpha log pi(a'|s')), a' ~ pi(.|s').
template <typename Scalar>
SoftTargets<Scalar> soft_targets(const ActorPolicy<Scalar>& actor, const CriticPair<Scalar>& critics,
                                 const Batch<Scalar>& batch, const fa::Mat<Scalar>& next_noise, Scalar alpha,
                                 double gamma) {
  SoftTargets<Scalar> t;
  const auto next = actor.sample(batch.next_states, next_noise);
  const fa::Mat<Scalar> input = stack<Scalar>(batch.next_states, next.action);
  t.q1_target = critics.q1_target.forward(input).row(0).transpose();
  t.q2_target = critics.q2_target.forward(input).row(0).transpose();
  t.min_target = t.q1_target.cwiseMin(t.q2_target);
  t.next_log_prob = next.log_prob;
  const fa::Vec<Scalar> soft_value = t.min_target - alpha * next.log_prob;
  t.y = batch.rewards +
        (Scalar(gamma) * (Scalar(1) - batch.terminals.array()) * soft_value.array()).matrix();
  return t;
}

template <typename Scalar>
struct LossAndGrad {
  Scalar loss{};
  fa::Vec<Scalar> grad;
  fa::Vec<Scalar> aux;  // critic: Q values; actor: log-probabilities
};

/// mean((Q(s,a) - y)^2) and its parameter gradient.
template <typename Scalar>
LossAndGrad<Scalar> critic_loss(const fa::Mlp<Scalar>& q, const fa::Mat<Scalar>& states,
                                const fa::Mat<Scalar>& actions, const fa::Vec<Scalar>& y) {
  fa::Tape<Scalar> tape;
  const fa::Mat<Scalar> out = q.forward(stack<Scalar>(states, actions), tape);
  const fa::Vec<Scalar> diff = out.row(0).transpose() - y;
  const auto B = static_cast<Scalar>(y.size());
  LossAndGrad<Scalar> r;
  r.loss = diff.squaredNorm() / B;
  r.aux = out.row(0).transpose();
  const fa::Mat<Scalar> grad_out = (Scalar(2) / B) * diff.transpose();
  r.grad = fa::Vec<Scalar>::Zero(q.params().size());
  q.backward(tape, grad_out, r.grad);
  return r;
}

/// mean(alpha log pi(a~|s) - min(Q1,Q2)(s, a~)) with a~ reparameterized by the given noise.
template <typename Scalar>
LossAndGrad<Scalar> actor_loss(const ActorPolicy<Scalar>& actor, const CriticPair<Scalar>& critics,
                               const fa::Mat<Scalar>& states, const fa::Mat<Scalar>& noise, Scalar alpha) {
  using MatT = fa::Mat<Scalar>;
  const auto A = static_cast<Eigen::Index>(actor.action_dim());
  const auto B = states.cols();
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(B);

  auto s = actor.sample(states, noise);
  const MatT input = stack<Scalar>(states, s.action);
  fa::Tape<Scalar> t1;
  fa::Tape<Scalar> t2;
  const MatT q1 = critics.q1.forward(input, t1);
  const MatT q2 = critics.q2.forward(input, t2);

  MatT g1 = MatT::Zero(1, B);
  MatT g2 = MatT::Zero(1, B);
  Scalar q_sum = 0;
  for (Eigen::Index b = 0; b < B; ++b) {
    if (q1(0, b) <= q2(0, b)) {
      g1(0, b) = -inv_b;
      q_sum += q1(0, b);
    } else {
      g2(0, b) = -inv_b;
      q_sum += q2(0, b);
    }
  }

  LossAndGrad<Scalar> r;
  r.aux = s.log_prob;
  r.loss = (alpha * s.log_prob.sum() - q_sum) * inv_b;

  fa::Vec<Scalar> scratch1 = fa::Vec<Scalar>::Zero(critics.q1.params().size());
  fa::Vec<Scalar> scratch2 = fa::Vec<Scalar>::Zero(critics.q2.params().size());
  const MatT d_input = critics.q1.backward(t1, g1, scratch1) + critics.q2.backward(t2, g2, scratch2);
  const MatT d_action = d_input.bottomRows(A);

  const auto a = s.action.array();
  const auto one_minus_a2 = Scalar(1) - a.square();
  // d log pi / d pre_tanh through the squashing correction
  const MatT dlogp_du = (Scalar(2) * a * one_minus_a2 / (one_minus_a2 + Scalar(kSquashEps))).matrix();
  const MatT d_pre = (d_action.array() * one_minus_a2).matrix() + (alpha * inv_b) * dlogp_du;

  MatT grad_out(2 * A, B);
  grad_out.topRows(A) = d_pre;
  const auto inside = ((s.raw_log_std.array() > Scalar(kLogStdMin)) && (s.raw_log_std.array() < Scalar(kLogStdMax)))
                          .template cast<Scalar>();
  grad_out.bottomRows(A) =
      ((d_pre.array() * s.std.array() * s.noise.array() - alpha * inv_b) * inside).matrix();

  r.grad = fa::Vec<Scalar>::Zero(actor.net().params().size());
  actor.net().backward(s.tape, grad_out, r.grad);
  return r;
}

struct LossSummary {
  double critic1 = 0.0;
  double critic2 = 0.0;
  double actor = 0.0;
  double temperature_loss = 0.0;
  double alpha = 0.0;
  double mean_q = 0.0;

  bool finite() const {
    return std::isfinite(critic1) && std::isfinite(critic2) && std::isfinite(actor) && std::isfinite(temperature_loss) &&
           std::isfinite(alpha);
  }
};

template <typename Scalar = float>
class SoftActorCritic {
 public:
  using VecT = fa::Vec<Scalar>;
  using MatT = fa::Mat<Scalar>;

  template <typename Rng>
  SoftActorCritic(std::size_t obs_dim, std::size_t action_dim, SacConfig config, Rng& rng)
      : config_(std::move(config)),
        actor_(ActorPolicy<Scalar>::initialized(obs_dim, action_dim, config_.hidden, rng)),
        critics_(CriticPair<Scalar>::initialized(obs_dim, action_dim, config_.hidden, rng)) {
    config_.validate();
    log_alpha_ = VecT::Constant(1, static_cast<Scalar>(std::log(config_.initial_temperature)));
    target_entropy_ = config_.target_entropy.value_or(-static_cast<double>(action_dim));
  }

  const SacConfig& config() const { return config_; }
  ActorPolicy<Scalar>& actor() { return actor_; }
  const ActorPolicy<Scalar>& actor() const { return actor_; }
  CriticPair<Scalar>& critics() { return critics_; }
  const CriticPair<Scalar>& critics() const { return critics_; }
  Scalar alpha() const { return std::exp(log_alpha_[0]); }
  void set_alpha(double alpha) { log_alpha_[0] = static_cast<Scalar>(std::log(alpha)); }
  double target_entropy() const { return target_entropy_; }
  std::uint64_t updates() const { return updates_; }

  template <typename Rng>
  LossSummary update(const ReplayBuffer<Scalar>& buffer, Rng& rng) {
    return update(buffer.sample(config_.batch_size, rng), rng);
  }

  /// One gradient step each for both critics, the actor and the temperature,
  /// then a soft target update.
  template <typename Rng>
  LossSummary update(const Batch<Scalar>& batch, Rng& rng) {
    if (batch.size() < 1) throw ConfigError("sac update needs a non-empty batch");
    const auto A = static_cast<Eigen::Index>(actor_.action_dim());
    const auto B = batch.size();
    LossSummary out;
    const Scalar alpha_now = alpha();

    const auto targets = soft_targets(actor_, critics_, batch, gaussian_noise<Scalar>(A, B, rng), alpha_now,
                                      config_.gamma);
    auto c1 = critic_loss(critics_.q1, batch.states, batch.actions, targets.y);
    auto c2 = critic_loss(critics_.q2, batch.states, batch.actions, targets.y);
    fa::adaptive_update(critics_.q1.params(), c1.grad, q1_opt_, config_.lr);
    fa::adaptive_update(critics_.q2.params(), c2.grad, q2_opt_, config_.lr);
    out.critic1 = static_cast<double>(c1.loss);
    out.critic2 = static_cast<double>(c2.loss);
    out.mean_q = static_cast<double>(c1.aux.mean());

    auto pi = actor_loss(actor_, critics_, batch.states, gaussian_noise<Scalar>(A, B, rng), alpha_now);
    fa::adaptive_update(actor_.net().params(), pi.grad, actor_opt_, config_.lr);
    out.actor = static_cast<double>(pi.loss);

    const double entropy_gap = static_cast<double>(pi.aux.mean()) + target_entropy_;
    out.temperature_loss = -static_cast<double>(log_alpha_[0]) * entropy_gap;
    if (config_.learn_temperature) {
      VecT g(1);
      g[0] = static_cast<Scalar>(-entropy_gap);
      fa::adaptive_update(log_alpha_, g, alpha_opt_, config_.lr);
    }
    out.alpha = static_cast<double>(alpha());

    critics_.soft_update(config_.tau);
    ++updates_;
    return out;
  }

  void save(Checkpoint& ck, const std::string& prefix = "sac.") const {
    ck.put(prefix + "actor", actor_.net());
    ck.put(prefix + "q1", critics_.q1);
    ck.put(prefix + "q2", critics_.q2);
    ck.put(prefix + "q1_target", critics_.q1_target);
    ck.put(prefix + "q2_target", critics_.q2_target);
    ck.put_scalar(prefix + "log_alpha", static_cast<double>(log_alpha_[0]));
    ck.put_scalar(prefix + "updates", static_cast<double>(updates_));
    save_adam(ck, prefix + "actor", actor_opt_);
    save_adam(ck, prefix + "q1", q1_opt_);
    save_adam(ck, prefix + "q2", q2_opt_);
    save_adam(ck, prefix + "log_alpha", alpha_opt_);
  }

  void load(const Checkpoint& ck, const std::string& prefix = "sac.") {
    ck.load_into(prefix + "actor", actor_.net());
    ck.load_into(prefix + "q1", critics_.q1);
    ck.load_into(prefix + "q2", critics_.q2);
    ck.load_into(prefix + "q1_target", critics_.q1_target);
    ck.load_into(prefix + "q2_target", critics_.q2_target);
    log_alpha_[0] = static_cast<Scalar>(ck.get_scalar(prefix + "log_alpha"));
    if (ck.has(prefix + "updates")) updates_ = static_cast<std::uint64_t>(ck.get_scalar(prefix + "updates"));
    load_adam(ck, prefix + "actor", actor_opt_);
    load_adam(ck, prefix + "q1", q1_opt_);
    load_adam(ck, prefix + "q2", q2_opt_);
    load_adam(ck, prefix + "log_alpha", alpha_opt_);
  }

 private:
  static void save_adam(Checkpoint& ck, const std::string& name, const fa::AdamState<Scalar>& s) {
    if (s.m.size() == 0) return;
    ck.put(name + ".adam_m", s.m);
    ck.put(name + ".adam_v", s.v);
    ck.put_scalar(name + ".adam_step", static_cast<double>(s.step));
  }

  static void load_adam(const Checkpoint& ck, const std::string& name, fa::AdamState<Scalar>& s) {
    if (!ck.has(name + ".adam_m")) return;
    s.m = ck.get<Scalar>(name + ".adam_m");
    s.v = ck.get<Scalar>(name + ".adam_v");
    s.step = static_cast<std::int64_t>(ck.get_scalar(name + ".adam_step"));
  }

  SacConfig config_;
  ActorPolicy<Scalar> actor_;
  CriticPair<Scalar> critics_;
  VecT log_alpha_;
  double target_entropy_ = 0.0;
  fa::AdamState<Scalar> actor_opt_;
  fa::AdamState<Scalar> q1_opt_;
  fa::AdamState<Scalar> q2_opt_;
  fa::AdamState<Scalar> alpha_opt_;
  std::uint64_t updates_ = 0;
};

}  // namespace acord::sac
