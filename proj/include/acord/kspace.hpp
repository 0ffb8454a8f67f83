#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acord/error.hpp"

namespace acord {

/// A point of K = [0,1]^m. Construction validates the range; use clamped()
/// for values coming from sliders or the network.
class BehaviorOversightVector {
 public:
  BehaviorOversightVector() = default;

  explicit BehaviorOversightVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError("behavior oversight value " + std::to_string(v) + " outside [0,1]");
      }
    }
  }

  static BehaviorOversightVector clamped(std::span<const double> raw) {
    std::vector<double> values(raw.begin(), raw.end());
    for (double& v : values) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    return BehaviorOversightVector(std::move(values));
  }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t j) const { return values_[j]; }
  std::span<const double> values() const { return values_; }

  bool operator==(const BehaviorOversightVector&) const = default;

 private:
  std::vector<double> values_;
};

/// Which state coordinate each k_j controls. One coordinate per k_j.
struct FeatureMap {
  struct Entry {
    std::size_t k_index;
    std::size_t state_index;
  };

  std::vector<Entry> entries;
  std::vector<std::string> names;

  std::size_t size() const { return entries.size(); }

  void validate(std::size_t state_dim) const {
    if (entries.empty()) throw ConfigError("feature map needs at least one entry (m >= 1)");
    if (entries.size() > state_dim) {
      throw ConfigError("feature map has more entries than state coordinates (m > n)");
    }
    if (!names.empty() && names.size() != entries.size()) {
      throw ConfigError("feature map names/entries length mismatch");
    }
    std::vector<bool> used(state_dim, false);
    for (std::size_t j = 0; j < entries.size(); ++j) {
      const auto& e = entries[j];
      if (e.k_index != j) throw ConfigError("feature map entries must be listed in k order");
      if (e.state_index >= state_dim) {
        throw ConfigError("feature map state index " + std::to_string(e.state_index) +
                          " out of range for state dimension " + std::to_string(state_dim));
      }
      if (used[e.state_index]) throw ConfigError("feature map state indices must be distinct");
      used[e.state_index] = true;
    }
  }
};

inline FeatureMap make_feature_map(const std::vector<std::size_t>& state_indices,
                                   std::vector<std::string> names = {}) {
  FeatureMap map;
  for (std::size_t j = 0; j < state_indices.size(); ++j) map.entries.push_back({j, state_indices[j]});
  if (names.empty()) {
    for (std::size_t j = 0; j < state_indices.size(); ++j) names.push_back("k" + std::to_string(j + 1));
  }
  map.names = std::move(names);
  return map;
}

/// Environment state with k appended. Layout is fixed: env coordinates first, then k.
struct AugmentedState {
  Eigen::VectorXd env_state;
  BehaviorOversightVector k;

  std::size_t size() const { return static_cast<std::size_t>(env_state.size()) + k.size(); }

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    out.head(env_state.size()) = env_state;
    for (std::size_t j = 0; j < k.size(); ++j) out[env_state.size() + static_cast<Eigen::Index>(j)] = k[j];
    return out;
  }
};

inline AugmentedState augment_state(const Eigen::VectorXd& env_state, const BehaviorOversightVector& k) {
  const auto n = static_cast<std::size_t>(env_state.size());
  if (k.empty()) throw ConfigError("augment_state: k must have at least one entry");
  if (k.size() > n) throw ConfigError("augment_state: k longer than the environment state");
  return {env_state, k};
}

inline AugmentedState augment_state(const Eigen::VectorXd& env_state, const BehaviorOversightVector& k,
                                    const FeatureMap& map) {
  map.validate(static_cast<std::size_t>(env_state.size()));
  if (k.size() != map.size()) {
    throw ConfigError("augment_state: k has " + std::to_string(k.size()) + " entries, feature map has " +
                      std::to_string(map.size()));
  }
  return augment_state(env_state, k);
}

/// Inverse of AugmentedState::flatten for a known environment dimension.
inline AugmentedState split_augmented(const Eigen::VectorXd& flat, std::size_t n) {
  if (static_cast<std::size_t>(flat.size()) <= n) throw ConfigError("split_augmented: no k coordinates");
  const auto m = static_cast<std::size_t>(flat.size()) - n;
  std::vector<double> k(m);
  for (std::size_t j = 0; j < m; ++j) k[j] = flat[static_cast<Eigen::Index>(n + j)];
  return {flat.head(static_cast<Eigen::Index>(n)), BehaviorOversightVector(std::move(k))};
}

template <typename Rng>
BehaviorOversightVector sample_k(std::size_t m, Rng& rng) {
  if (m == 0) throw ConfigError("sample_k: m must be >= 1");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> values(m);
  for (auto& v : values) v = unit(rng);
  return BehaviorOversightVector(std::move(values));
}

/// (s_{i_1}, ..., s_{i_m}) in feature-map order.
inline std::vector<double> extract_features(const AugmentedState& s, const FeatureMap& map) {
  std::vector<double> out;
  out.reserve(map.size());
  for (const auto& e : map.entries) {
    if (e.state_index >= static_cast<std::size_t>(s.env_state.size())) {
      throw ConfigError("extract_features: state index " + std::to_string(e.state_index) + " out of range");
    }
    out.push_back(s.env_state[static_cast<Eigen::Index>(e.state_index)]);
  }
  return out;
}

}  // namespace acord
