#pragma once

// Small dense networks with hand-written reverse-mode gradients.
//
// Batches are column-major: an input matrix is (input_size x batch). Parameters
// live in one flat vector; per layer the weight matrix (out x in, column-major)
// is followed by its bias.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "acord/error.hpp"

namespace acord::fa {

enum class Activation { identity, relu, tanh, sigmoid };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + name + "'");
}

inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct MlpSpec {
  std::vector<int> layer_sizes;  // input, hidden..., output
  Activation hidden = Activation::relu;
  Activation output = Activation::identity;

  void validate() const {
    if (layer_sizes.size() < 3) throw ConfigError("MlpSpec needs an input, at least one hidden and an output layer");
    for (int s : layer_sizes) {
      if (s < 1) throw ConfigError("MlpSpec layer sizes must be >= 1");
    }
  }

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return layer_sizes.size() - 1; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
      n += static_cast<std::size_t>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
    }
    return n;
  }

  std::string describe() const {
    std::ostringstream os;
    for (std::size_t l = 0; l < layer_sizes.size(); ++l) os << (l ? "-" : "") << layer_sizes[l];
    os << ":" << activation_name(hidden) << ":" << activation_name(output);
    return os.str();
  }

  std::uint64_t hash() const { return fnv1a(describe()); }

  bool operator==(const MlpSpec&) const = default;
};

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

template <typename Scalar>
void apply_activation(Mat<Scalar>& z, Activation a) {
  switch (a) {
    case Activation::identity: break;
    case Activation::relu: z = z.cwiseMax(Scalar(0)); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::sigmoid:
      z = z.unaryExpr([](Scalar v) {
        // split on sign so exp never overflows
        if (v >= 0) return Scalar(1) / (Scalar(1) + std::exp(-v));
        const Scalar e = std::exp(v);
        return e / (Scalar(1) + e);
      });
      break;
  }
}

// grad <- grad * f'(.) expressed through the activation output
template <typename Scalar>
void scale_by_derivative(Mat<Scalar>& grad, const Mat<Scalar>& post, Activation a) {
  switch (a) {
    case Activation::identity: break;
    case Activation::relu: grad = grad.cwiseProduct((post.array() > Scalar(0)).template cast<Scalar>().matrix()); break;
    case Activation::tanh: grad = grad.cwiseProduct((Scalar(1) - post.array().square()).matrix()); break;
    case Activation::sigmoid: grad = grad.cwiseProduct((post.array() * (Scalar(1) - post.array())).matrix()); break;
  }
}

}  // namespace detail

/// Activations recorded by a forward pass, consumed by backward().
template <typename Scalar>
struct Tape {
  std::vector<Mat<Scalar>> activations;  // [0] = input, [l] = output of layer l
};

template <typename Scalar>
class Mlp {
 public:
  using VecT = Vec<Scalar>;
  using MatT = Mat<Scalar>;

  Mlp() = default;

  explicit Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    params_ = VecT::Zero(static_cast<Eigen::Index>(spec_.param_count()));
  }

  Mlp(MlpSpec spec, VecT params) : spec_(std::move(spec)), params_(std::move(params)) {
    spec_.validate();
    if (static_cast<std::size_t>(params_.size()) != spec_.param_count()) {
      throw ConfigError("parameter vector length " + std::to_string(params_.size()) + " does not match spec " +
                        spec_.describe());
    }
  }

  /// Fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  template <typename Rng>
  static Mlp initialized(MlpSpec spec, Rng& rng) {
    Mlp net(std::move(spec));
    std::size_t offset = 0;
    for (std::size_t l = 0; l < net.spec_.layer_count(); ++l) {
      const int in = net.spec_.layer_sizes[l];
      const int out = net.spec_.layer_sizes[l + 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      const std::size_t count = static_cast<std::size_t>(out) * (in + 1);
      for (std::size_t i = 0; i < count; ++i) net.params_[static_cast<Eigen::Index>(offset + i)] = Scalar(dist(rng));
      offset += count;
    }
    return net;
  }

  const MlpSpec& spec() const { return spec_; }
  VecT& params() { return params_; }
  const VecT& params() const { return params_; }

  /// Scales the last layer so initial outputs stay near the activation's center.
  void scale_output_layer(Scalar factor) {
    const std::size_t l = spec_.layer_count() - 1;
    const auto [w, b] = layer_offsets(l);
    const auto count = static_cast<Eigen::Index>(b - w + spec_.layer_sizes[l + 1]);
    params_.segment(static_cast<Eigen::Index>(w), count) *= factor;
  }

  /// Makes every weight non-negative. With monotone activations the network is
  /// then non-decreasing in each input.
  void make_weights_nonnegative() {
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      const auto [w, b] = layer_offsets(l);
      params_.segment(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(b - w)) =
          params_.segment(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(b - w)).cwiseAbs();
    }
  }

  MatT forward(const MatT& input) const {
    check_input(input);
    MatT a = input;
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      MatT z = (weight(l) * a).colwise() + bias(l);
      detail::apply_activation(z, l + 1 == spec_.layer_count() ? spec_.output : spec_.hidden);
      a = std::move(z);
    }
    return a;
  }

  MatT forward(const MatT& input, Tape<Scalar>& tape) const {
    check_input(input);
    tape.activations.clear();
    tape.activations.reserve(spec_.layer_count() + 1);
    tape.activations.push_back(input);
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      MatT z = (weight(l) * tape.activations.back()).colwise() + bias(l);
      detail::apply_activation(z, l + 1 == spec_.layer_count() ? spec_.output : spec_.hidden);
      tape.activations.push_back(std::move(z));
    }
    return tape.activations.back();
  }

  /// Accumulates dL/dparams into grad_params (+=) and returns dL/dinput.
  MatT backward(const Tape<Scalar>& tape, const MatT& grad_output, VecT& grad_params) const {
    if (grad_params.size() != params_.size()) grad_params = VecT::Zero(params_.size());
    MatT delta = grad_output;
    detail::scale_by_derivative(delta, tape.activations.back(), spec_.output);
    for (std::size_t l = spec_.layer_count(); l-- > 0;) {
      const auto [w_off, b_off] = layer_offsets(l);
      const int in = spec_.layer_sizes[l];
      const int out = spec_.layer_sizes[l + 1];
      Eigen::Map<MatT> gw(grad_params.data() + w_off, out, in);
      Eigen::Map<VecT> gb(grad_params.data() + b_off, out);
      gw.noalias() += delta * tape.activations[l].transpose();
      gb.noalias() += delta.rowwise().sum();
      MatT prev = weight(l).transpose() * delta;
      if (l > 0) detail::scale_by_derivative(prev, tape.activations[l], spec_.hidden);
      delta = std::move(prev);
    }
    return delta;
  }

  template <typename Other>
  Mlp<Other> cast() const {
    return Mlp<Other>(spec_, params_.template cast<Other>());
  }

 private:
  std::pair<std::size_t, std::size_t> layer_offsets(std::size_t layer) const {
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layer; ++l) {
      offset += static_cast<std::size_t>(spec_.layer_sizes[l + 1]) * (spec_.layer_sizes[l] + 1);
    }
    const std::size_t w = offset;
    const std::size_t b = w + static_cast<std::size_t>(spec_.layer_sizes[layer + 1]) * spec_.layer_sizes[layer];
    return {w, b};
  }

  Eigen::Map<const MatT> weight(std::size_t l) const {
    return {params_.data() + layer_offsets(l).first, spec_.layer_sizes[l + 1], spec_.layer_sizes[l]};
  }

  Eigen::Map<const VecT> bias(std::size_t l) const {
    return {params_.data() + layer_offsets(l).second, spec_.layer_sizes[l + 1]};
  }

  void check_input(const MatT& input) const {
    if (input.rows() != spec_.input_size()) {
      throw ConfigError("network input has " + std::to_string(input.rows()) + " rows, expected " +
                        std::to_string(spec_.input_size()));
    }
  }

  MlpSpec spec_;
  VecT params_;
};

/// Single-sample evaluation.
template <typename Scalar>
Vec<Scalar> forward(const MlpSpec& spec, const Vec<Scalar>& params, const Vec<Scalar>& input) {
  const Mlp<Scalar> net(spec, params);
  return net.forward(Mat<Scalar>(input)).col(0);
}

/// Scalar loss of the network outputs plus dLoss/doutputs.
template <typename Scalar>
using LossClosure = std::function<std::pair<Scalar, Mat<Scalar>>(const Mat<Scalar>& outputs)>;

/// Reverse-mode gradient of loss_closure(forward(inputs)) with respect to the parameters.
template <typename Scalar>
Vec<Scalar> grad(const MlpSpec& spec, const Vec<Scalar>& params, const Mat<Scalar>& inputs,
                 const LossClosure<Scalar>& loss_closure) {
  const Mlp<Scalar> net(spec, params);
  Tape<Scalar> tape;
  const Mat<Scalar> out = net.forward(inputs, tape);
  const auto [loss, grad_out] = loss_closure(out);
  (void)loss;
  Vec<Scalar> g = Vec<Scalar>::Zero(params.size());
  net.backward(tape, grad_out, g);
  return g;
}

struct GradReport {
  Eigen::VectorXd analytic_grad;
  Eigen::VectorXd numeric_grad;
  double max_abs_rel_error = 0.0;
};

/// Compares an analytic gradient with central finite differences of loss(params).
/// Relative error per coordinate is |a - n| / max(|a| + |n|, floor).
inline GradReport gradient_check(const std::function<double(const Eigen::VectorXd&)>& loss,
                                 const Eigen::VectorXd& params, const Eigen::VectorXd& analytic,
                                 double step = 1e-5, double floor = 1e-6) {
  GradReport report;
  report.analytic_grad = analytic;
  report.numeric_grad.resize(params.size());
  Eigen::VectorXd probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + step;
    const double up = loss(probe);
    probe[i] = params[i] - step;
    const double down = loss(probe);
    probe[i] = params[i];
    report.numeric_grad[i] = (up - down) / (2.0 * step);
    const double a = analytic[i];
    const double n = report.numeric_grad[i];
    const double rel = std::abs(a - n) / std::max(std::abs(a) + std::abs(n), floor);
    report.max_abs_rel_error = std::max(report.max_abs_rel_error, rel);
  }
  return report;
}

/// Adam moment estimates for one parameter vector.
template <typename Scalar>
struct AdamState {
  Vec<Scalar> m;
  Vec<Scalar> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam step: params move against grad with per-coordinate scaling.
template <typename Scalar>
void adaptive_update(Vec<Scalar>& params, const Vec<Scalar>& grad, AdamState<Scalar>& state, double lr) {
  if (grad.size() != params.size()) throw ConfigError("adaptive_update: gradient/parameter size mismatch");
  if (state.m.size() != params.size()) {
    state.m = Vec<Scalar>::Zero(params.size());
    state.v = Vec<Scalar>::Zero(params.size());
  }
  ++state.step;
  state.m = Scalar(state.beta1) * state.m + Scalar(1.0 - state.beta1) * grad;
  state.v = Scalar(state.beta2) * state.v + Scalar(1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const Scalar step_size = Scalar(lr / c1);
  const Scalar sqrt_c2 = Scalar(std::sqrt(c2));
  params.array() -= step_size * state.m.array() / (state.v.array().sqrt() / sqrt_c2 + Scalar(state.eps));
}

}  // namespace acord::fa
