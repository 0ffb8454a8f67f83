#pragma once

// Per-feature discriminators W_j: s_i -> (0,1) predicting k_j, trained with a
// range-regularized squared error, and the diversity reward they induce.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <random>
#include <string>
#include <vector>

#include "acord/checkpoint.hpp"
#include "acord/error.hpp"
#include "acord/funcapprox.hpp"
#include "acord/kspace.hpp"

namespace acord {

struct DiscriminatorConfig {
  std::vector<int> hidden{64, 64};
  double epsilon = 1e-3;  // range-term denominator guard
  double delta = 1e-3;    // clamp inside the reward log
  double lr = 3e-4;
  std::size_t batch_size = 256;
  std::size_t capacity = 100'000;
  bool monotone_init = true;

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("discriminator.epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("discriminator.delta must be in (0,1)");
    if (batch_size < 1) throw ConfigError("discriminator.batch_size must be >= 1");
    if (capacity < 1) throw ConfigError("discriminator.capacity must be >= 1");
    if (hidden.empty()) throw ConfigError("discriminator.hidden needs at least one layer");
  }
};

template <typename Scalar = float>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(fa::Mlp<Scalar> net, std::size_t feature_index) : net_(std::move(net)), feature_index_(feature_index) {
    if (net_.spec().input_size() != 1 || net_.spec().output_size() != 1 ||
        net_.spec().output != fa::Activation::sigmoid) {
      throw ConfigError("discriminator network must map one input to one sigmoid output");
    }
  }

  static fa::MlpSpec make_spec(const std::vector<int>& hidden) {
    fa::MlpSpec spec;
    spec.layer_sizes.push_back(1);
    spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
    spec.layer_sizes.push_back(1);
    spec.output = fa::Activation::sigmoid;
    return spec;
  }

  /// With monotone_init every weight starts non-negative, so the initial
  /// prediction increases with the feature.
  template <typename Rng>
  static Discriminator initialized(std::size_t feature_index, const std::vector<int>& hidden, bool monotone_init,
                                   Rng& rng) {
    auto net = fa::Mlp<Scalar>::initialized(make_spec(hidden), rng);
    if (monotone_init) net.make_weights_nonnegative();
    return Discriminator(std::move(net), feature_index);
  }

  double predict(double feature) const {
    fa::Mat<Scalar> in(1, 1);
    in(0, 0) = static_cast<Scalar>(feature);
    return static_cast<double>(net_.forward(in)(0, 0));
  }

  fa::Vec<Scalar> predict(const fa::Vec<Scalar>& features) const {
    return net_.forward(fa::Mat<Scalar>(features.transpose())).row(0).transpose();
  }

  std::size_t feature_index() const { return feature_index_; }
  fa::Mlp<Scalar>& net() { return net_; }
  const fa::Mlp<Scalar>& net() const { return net_; }

 private:
  fa::Mlp<Scalar> net_;
  std::size_t feature_index_ = 0;
};

template <typename Scalar>
struct BatchLoss {
  Scalar loss{};
  Scalar mse{};
  Scalar range{};
  fa::Vec<Scalar> grad_preds;  // dLoss/dpredictions
};

/// MSE(preds, targets) + 1 / (|max(preds) - min(preds)| + eps), over one batch.
template <typename Scalar>
BatchLoss<Scalar> batch_loss(const fa::Vec<Scalar>& preds, const fa::Vec<Scalar>& targets, double epsilon) {
  if (preds.size() == 0 || preds.size() != targets.size()) {
    throw ConfigError("batch_loss needs equal-length non-empty predictions and targets");
  }
  const auto B = static_cast<Scalar>(preds.size());
  Eigen::Index i_max = 0;
  Eigen::Index i_min = 0;
  const Scalar p_max = preds.maxCoeff(&i_max);
  const Scalar p_min = preds.minCoeff(&i_min);
  BatchLoss<Scalar> r;
  const fa::Vec<Scalar> diff = preds - targets;
  r.mse = diff.squaredNorm() / B;
  r.range = std::abs(p_max - p_min);
  const Scalar denom = r.range + static_cast<Scalar>(epsilon);
  r.loss = r.mse + Scalar(1) / denom;
  r.grad_preds = (Scalar(2) / B) * diff;
  if (i_max != i_min) {
    const Scalar g = Scalar(1) / (denom * denom);
    r.grad_preds[i_max] -= g;
    r.grad_preds[i_min] += g;
  }
  return r;
}

/// Loss for a discriminator on (feature, target) pairs, with the gradient
/// with respect to its parameters.
template <typename Scalar>
std::pair<BatchLoss<Scalar>, fa::Vec<Scalar>> batch_loss_and_grad(const Discriminator<Scalar>& d,
                                                                  const fa::Vec<Scalar>& features,
                                                                  const fa::Vec<Scalar>& targets, double epsilon) {
  fa::Tape<Scalar> tape;
  const fa::Mat<Scalar> out = d.net().forward(fa::Mat<Scalar>(features.transpose()), tape);
  auto loss = batch_loss<Scalar>(out.row(0).transpose(), targets, epsilon);
  fa::Vec<Scalar> grad = fa::Vec<Scalar>::Zero(d.net().params().size());
  d.net().backward(tape, fa::Mat<Scalar>(loss.grad_preds.transpose()), grad);
  return {loss, grad};
}

/// (1/m) sum_j -log(max(delta, |W_j - k_j|)) given the discriminator outputs.
inline double diversity_reward_from_predictions(std::span<const double> predictions, const BehaviorOversightVector& k,
                                                double delta) {
  if (predictions.size() != k.size() || k.empty()) {
    throw ConfigError("diversity reward: predictions and k differ in length");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) sum += -std::log(std::max(delta, std::abs(predictions[j] - k[j])));
  return sum / static_cast<double>(k.size());
}

/// Transitions (s, a, s', r) in augmented coordinates. Discriminator
/// training pairs are extracted from s' when sampled.
class DiscriminatorBuffer {
 public:
  DiscriminatorBuffer(std::size_t state_dim, std::size_t action_dim, std::size_t capacity)
      : states_(static_cast<Eigen::Index>(state_dim), static_cast<Eigen::Index>(capacity)),
        actions_(static_cast<Eigen::Index>(action_dim), static_cast<Eigen::Index>(capacity)),
        next_states_(static_cast<Eigen::Index>(state_dim), static_cast<Eigen::Index>(capacity)),
        rewards_(static_cast<Eigen::Index>(capacity)),
        capacity_(capacity) {
    if (capacity == 0) throw ConfigError("discriminator buffer capacity must be >= 1");
  }

  void add(const Eigen::VectorXd& s, const Eigen::VectorXd& a, const Eigen::VectorXd& s2, double r) {
    const auto c = static_cast<Eigen::Index>(cursor_);
    states_.col(c) = s.cast<float>();
    actions_.col(c) = a.cast<float>();
    next_states_.col(c) = s2.cast<float>();
    rewards_[c] = static_cast<float>(r);
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
    ++total_added_;
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_added() const { return total_added_; }

  struct Pairs {
    Eigen::MatrixXf features;  // m x B, s'_{i_j}
    Eigen::MatrixXf targets;   // m x B, k_j
  };

  /// Uniformly samples batch transitions and extracts (feature, k) pairs.
  /// env_dim is n, the coordinate where k starts in the augmented state.
  template <typename Rng>
  Pairs sample_pairs(std::size_t batch, const FeatureMap& map, std::size_t env_dim, Rng& rng) const {
    if (size_ == 0) throw ConfigError("cannot sample an empty discriminator buffer");
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    const auto m = static_cast<Eigen::Index>(map.size());
    Pairs p{Eigen::MatrixXf(m, static_cast<Eigen::Index>(batch)), Eigen::MatrixXf(m, static_cast<Eigen::Index>(batch))};
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(batch); ++b) {
      const auto c = static_cast<Eigen::Index>(pick(rng));
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto& e = map.entries[static_cast<std::size_t>(j)];
        p.features(j, b) = next_states_(static_cast<Eigen::Index>(e.state_index), c);
        p.targets(j, b) = next_states_(static_cast<Eigen::Index>(env_dim + e.k_index), c);
      }
    }
    return p;
  }

 private:
  Eigen::MatrixXf states_;
  Eigen::MatrixXf actions_;
  Eigen::MatrixXf next_states_;
  Eigen::VectorXf rewards_;
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::uint64_t total_added_ = 0;
};

/// The m discriminators for a feature map, with their optimizer state.
template <typename Scalar = float>
class DiscriminatorSet {
 public:
  template <typename Rng>
  DiscriminatorSet(const FeatureMap& map, DiscriminatorConfig config, Rng& rng) : map_(map), config_(std::move(config)) {
    config_.validate();
    for (const auto& e : map_.entries) {
      discs_.push_back(Discriminator<Scalar>::initialized(e.state_index, config_.hidden, config_.monotone_init, rng));
    }
    opts_.resize(discs_.size());
  }

  std::size_t size() const { return discs_.size(); }
  const FeatureMap& map() const { return map_; }
  const DiscriminatorConfig& config() const { return config_; }
  Discriminator<Scalar>& operator[](std::size_t j) { return discs_[j]; }
  const Discriminator<Scalar>& operator[](std::size_t j) const { return discs_[j]; }

  std::vector<double> predict(std::span<const double> features) const {
    if (features.size() != discs_.size()) throw ConfigError("discriminator set: feature count mismatch");
    std::vector<double> out(features.size());
    for (std::size_t j = 0; j < features.size(); ++j) out[j] = discs_[j].predict(features[j]);
    return out;
  }

  /// Mean over features of -log(max(delta, |W_j(s_{i_j}) - k_j|)), in [0, -log delta].
  double diversity_reward(const AugmentedState& s) const {
    const auto features = extract_features(s, map_);
    const auto preds = predict(features);
    return diversity_reward_from_predictions(preds, s.k, config_.delta);
  }

  /// One Adam step per discriminator on a sampled batch. Returns nothing when
  /// the buffer holds fewer than batch_size items.
  template <typename Rng>
  std::optional<std::vector<double>> update(const DiscriminatorBuffer& buffer, std::size_t env_dim, Rng& rng) {
    if (buffer.size() < config_.batch_size || buffer.size() == 0) return std::nullopt;
    const auto pairs = buffer.sample_pairs(config_.batch_size, map_, env_dim, rng);
    std::vector<double> losses;
    for (std::size_t j = 0; j < discs_.size(); ++j) {
      const fa::Vec<Scalar> f = pairs.features.row(static_cast<Eigen::Index>(j)).transpose().template cast<Scalar>();
      const fa::Vec<Scalar> t = pairs.targets.row(static_cast<Eigen::Index>(j)).transpose().template cast<Scalar>();
      auto [loss, grad] = batch_loss_and_grad(discs_[j], f, t, config_.epsilon);
      fa::adaptive_update(discs_[j].net().params(), grad, opts_[j], config_.lr);
      losses.push_back(static_cast<double>(loss.loss));
    }
    return losses;
  }

  /// Direct training step on explicit (feature, target) columns; used by the synthetic checks.
  BatchLoss<Scalar> train_step(std::size_t j, const fa::Vec<Scalar>& features, const fa::Vec<Scalar>& targets) {
    auto [loss, grad] = batch_loss_and_grad(discs_[j], features, targets, config_.epsilon);
    fa::adaptive_update(discs_[j].net().params(), grad, opts_[j], config_.lr);
    return loss;
  }

  void save(Checkpoint& ck, const std::string& prefix = "disc.") const {
    for (std::size_t j = 0; j < discs_.size(); ++j) ck.put(prefix + std::to_string(j), discs_[j].net());
  }

  void load(const Checkpoint& ck, const std::string& prefix = "disc.") {
    for (std::size_t j = 0; j < discs_.size(); ++j) ck.load_into(prefix + std::to_string(j), discs_[j].net());
  }

 private:
  FeatureMap map_;
  DiscriminatorConfig config_;
  std::vector<Discriminator<Scalar>> discs_;
  std::vector<fa::AdamState<Scalar>> opts_;
};

}  // namespace acord
