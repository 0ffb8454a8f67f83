#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "acord/funcapprox.hpp"
#include "oracles.hpp"

using namespace acord;
using fa::Mat;
using fa::Vec;

namespace {

// Hand-rolled forward pass that reads the documented parameter layout:
// per layer, W (out x in, column-major) then b.
Eigen::VectorXd reference_forward(const fa::MlpSpec& spec, const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd h = x;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    Eigen::VectorXd z(out);
    for (int o = 0; o < out; ++o) {
      double acc = p[static_cast<Eigen::Index>(off + static_cast<std::size_t>(in * out + o))];
      for (int i = 0; i < in; ++i) acc += p[static_cast<Eigen::Index>(off + static_cast<std::size_t>(i * out + o))] * h[i];
      z[o] = acc;
    }
    off += static_cast<std::size_t>(out * (in + 1));
    const bool last = l + 2 == spec.layer_sizes.size();
    const auto act = last ? spec.output : spec.hidden;
    for (int o = 0; o < out; ++o) {
      switch (act) {
        case fa::Activation::relu: z[o] = z[o] > 0 ? z[o] : 0.0; break;
        case fa::Activation::tanh: z[o] = std::tanh(z[o]); break;
        case fa::Activation::sigmoid: z[o] = 1.0 / (1.0 + std::exp(-z[o])); break;
        case fa::Activation::identity: break;
      }
    }
    h = z;
  }
  return h;
}

}  // namespace

TEST(MlpSpec, ParamCountAndValidation) {
  const fa::MlpSpec spec{{3, 4, 2}};
  EXPECT_EQ(spec.param_count(), 4u * 4u + 2u * 5u);
  EXPECT_THROW((fa::MlpSpec{{3, 2}}.validate()), ConfigError);
  EXPECT_THROW((fa::MlpSpec{{3, 0, 2}}.validate()), ConfigError);
  EXPECT_NE(spec.hash(), (fa::MlpSpec{{3, 5, 2}}.hash()));
  EXPECT_THROW(fa::Mlp<double>(spec, Eigen::VectorXd::Zero(3)), ConfigError);
}

TEST(Mlp, ForwardMatchesReferenceLayout) {
  std::mt19937_64 rng(1);
  for (auto act : {fa::Activation::relu, fa::Activation::tanh}) {
    const fa::MlpSpec spec{{4, 7, 5, 3}, act, fa::Activation::sigmoid};
    const auto net = fa::Mlp<double>::initialized(spec, rng);
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd x = Eigen::VectorXd::Random(4) * 3.0;
      const Eigen::VectorXd got = fa::forward(spec, net.params(), x);
      const Eigen::VectorXd want = reference_forward(spec, net.params(), x);
      EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Mlp, BatchForwardEqualsColumnwise) {
  std::mt19937_64 rng(2);
  const fa::MlpSpec spec{{3, 8, 2}};
  const auto net = fa::Mlp<double>::initialized(spec, rng);
  const Eigen::MatrixXd batch = Eigen::MatrixXd::Random(3, 6);
  const Eigen::MatrixXd out = net.forward(batch);
  for (int c = 0; c < 6; ++c) {
    EXPECT_LT((out.col(c) - fa::forward(spec, net.params(), Eigen::VectorXd(batch.col(c)))).norm(), 1e-12);
  }
}

TEST(Mlp, RejectsWrongInputRows) {
  std::mt19937_64 rng(3);
  const auto net = fa::Mlp<double>::initialized(fa::MlpSpec{{3, 4, 1}}, rng);
  EXPECT_THROW(net.forward(Eigen::MatrixXd::Zero(2, 1)), ConfigError);
}

TEST(Mlp, GradMatchesCentralDifferences) {
  std::mt19937_64 rng(4);
  for (auto act : {fa::Activation::relu, fa::Activation::tanh}) {
    const fa::MlpSpec spec{{3, 6, 5, 2}, act, fa::Activation::sigmoid};
    const auto net = fa::Mlp<double>::initialized(spec, rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 10);
    const Eigen::MatrixXd target = Eigen::MatrixXd::Random(2, 10);
    fa::LossClosure<double> closure = [&](const Eigen::MatrixXd& out) {
      const Eigen::MatrixXd d = out - target;
      return std::pair<double, Eigen::MatrixXd>{0.5 * d.squaredNorm(), d};
    };
    const Eigen::VectorXd g = fa::grad(spec, net.params(), x, closure);
    auto loss = [&](const Eigen::VectorXd& p) {
      double total = 0.0;
      for (int c = 0; c < 10; ++c) {
        total += 0.5 * (reference_forward(spec, p, x.col(c)) - target.col(c)).squaredNorm();
      }
      return total;
    };
    EXPECT_LT(oracle::max_relative_error(g, oracle::central_differences(loss, net.params(), 1e-6)), 1e-4);
  }
}

TEST(Mlp, BackwardReturnsInputGradient) {
  std::mt19937_64 rng(5);
  const fa::MlpSpec spec{{4, 6, 1}, fa::Activation::tanh};
  const auto net = fa::Mlp<double>::initialized(spec, rng);
  const Eigen::VectorXd x = Eigen::VectorXd::Random(4);
  fa::Tape<double> tape;
  net.forward(Eigen::MatrixXd(x), tape);
  Eigen::VectorXd gp = Eigen::VectorXd::Zero(net.params().size());
  const Eigen::MatrixXd dx = net.backward(tape, Eigen::MatrixXd::Ones(1, 1), gp);
  auto f = [&](const Eigen::VectorXd& in) { return reference_forward(spec, net.params(), in)[0]; };
  EXPECT_LT(oracle::max_relative_error(dx.col(0), oracle::central_differences(f, x, 1e-6)), 1e-5);
}

TEST(Mlp, BackwardAccumulates) {
  std::mt19937_64 rng(6);
  const auto net = fa::Mlp<double>::initialized(fa::MlpSpec{{2, 3, 1}}, rng);
  fa::Tape<double> tape;
  net.forward(Eigen::MatrixXd::Ones(2, 1), tape);
  Eigen::VectorXd once = Eigen::VectorXd::Zero(net.params().size());
  net.backward(tape, Eigen::MatrixXd::Ones(1, 1), once);
  Eigen::VectorXd twice = once;
  net.backward(tape, Eigen::MatrixXd::Ones(1, 1), twice);
  EXPECT_LT((twice - 2.0 * once).norm(), 1e-14);
}

TEST(GradientCheck, FlagsAWrongGradient) {
  auto loss = [](const Eigen::VectorXd& p) { return p.squaredNorm(); };
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 0.5);
  EXPECT_LT(fa::gradient_check(loss, p, 2.0 * p).max_abs_rel_error, 1e-8);
  EXPECT_GT(fa::gradient_check(loss, p, 3.0 * p).max_abs_rel_error, 0.1);
}

TEST(AdaptiveUpdate, MinimizesAQuadratic) {
  Eigen::VectorXd p = Eigen::VectorXd::Constant(4, 3.0);
  const Eigen::VectorXd target = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  fa::AdamState<double> state;
  for (int i = 0; i < 3000; ++i) fa::adaptive_update<double>(p, 2.0 * (p - target), state, 1e-2);
  EXPECT_LT((p - target).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(AdaptiveUpdate, FirstStepHasLearningRateMagnitude) {
  // With bias correction the first step is lr * sign(grad) up to eps.
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd g(3);
  g << 5.0, -0.01, 200.0;
  fa::AdamState<double> state;
  fa::adaptive_update<double>(p, g, state, 0.1);
  EXPECT_NEAR(p[0], -0.1, 1e-6);
  EXPECT_NEAR(p[1], 0.1, 1e-4);
  EXPECT_NEAR(p[2], -0.1, 1e-6);
  EXPECT_THROW(fa::adaptive_update<double>(p, Eigen::VectorXd::Zero(2), state, 0.1), ConfigError);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fa::fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fa::fnv1a("a"), 0xaf63dc4c8601ec8cull);
}
