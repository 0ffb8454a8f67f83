#pragma once

// Checks shared by the unit tests and the acceptance binary. Each returns a
// verdict plus a one-line account of what was measured.

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "acord/baselines.hpp"
#include "acord/discriminator.hpp"
#include "acord/envs/painter.hpp"
#include "acord/envs/shape.hpp"
#include "acord/envs/stroke.hpp"
#include "acord/metrics.hpp"
#include "acord/sac.hpp"
#include "acord/session.hpp"
#include "acord/trainer.hpp"
#include "oracles.hpp"

namespace criteria {

struct Verdict {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string str(const Args&... args) {
  std::ostringstream os;
  os.precision(7);
  (os << ... << args);
  return os.str();
}

// ---------------------------------------------------------------------------
// Discriminator loss on the three hand-worked batches.

struct WorkedBatch {
  std::vector<double> preds;
  std::vector<double> targets;
  double exact;   // computed by hand: mse + 1 / (range + eps)
  double stated;  // the value as usually quoted, to three decimals
};

inline std::vector<WorkedBatch> worked_batches() {
  return {{{0.0, 1.0}, {0.0, 1.0}, 0.0 + 1.0 / 1.001, 0.999},
          {{0.5, 0.5}, {0.5, 0.5}, 0.0 + 1.0 / 0.001, 1000.0},
          {{0.2, 0.6}, {0.0, 1.0}, (0.04 + 0.16) / 2.0 + 1.0 / 0.401, 2.594}};
}

inline Verdict discriminator_loss_worked_batches() {
  Verdict v{true, ""};
  for (const auto& b : worked_batches()) {
    const Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(b.preds.data(), 2);
    const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(b.targets.data(), 2);
    const double loss = acord::batch_loss<double>(p, t, 1e-3).loss;
    const bool exact_ok = std::abs(loss - b.exact) <= 1e-6;
    const bool stated_ok = std::abs(std::round(loss * 1000.0) / 1000.0 - b.stated) < 1e-9;
    v.pass = v.pass && exact_ok && stated_ok;
    v.detail += str(v.detail.empty() ? "" : ", ", "loss=", loss, " (hand ", b.exact, ", quoted ", b.stated, ")");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Reward branches on randomized inputs.

inline Verdict reward_branch_suite(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto map = acord::make_feature_map({0, 1});
  std::vector<acord::DiscriminatorSet<float>> sets;
  for (int i = 0; i < 8; ++i) {
    acord::DiscriminatorConfig dc;
    dc.hidden = {16, 16};
    dc.monotone_init = (i % 2 == 0);
    sets.emplace_back(map, dc, rng);
  }
  std::size_t counts[3] = {0, 0, 0};
  std::size_t wrong = 0;
  for (std::size_t n = 0; n < trials; ++n) {
    acord::AcordConfig cfg;
    cfg.progress_penalty = 0.01 + 5.0 * unit(rng);
    cfg.env_scale = 0.01 + 3.0 * unit(rng);
    cfg.diversity_scale = 3.0 * unit(rng);

    acord::TaskStep st;
    st.failed = unit(rng) < 0.3;
    st.terminated = st.failed || unit(rng) < 0.1;
    st.env_reward = st.failed ? -(0.1 + 200.0 * unit(rng)) : 2.0 * unit(rng) - 1.0;
    const double r = unit(rng);
    st.progress_h = r < 0.1 ? 0.0 : (r < 0.5 ? -unit(rng) : unit(rng));

    Eigen::VectorXd env(3);
    env << 4.0 * unit(rng) - 2.0, 4.0 * unit(rng) - 2.0, unit(rng);
    const acord::AugmentedState next{env, acord::sample_k(2, rng)};
    const auto& set = sets[n % sets.size()];
    const auto out = acord::acord_reward(next, st, set, cfg);

    // Expected value, written out from the rule.
    acord::RewardBranch branch;
    double expected;
    if (st.failed) {
      branch = acord::RewardBranch::failure;
      expected = cfg.env_scale * st.env_reward;
    } else if (st.progress_h <= 0.0) {
      branch = acord::RewardBranch::no_progress;
      expected = -cfg.progress_scale * cfg.progress_penalty;
    } else {
      branch = acord::RewardBranch::diversity;
      double sum = 0.0;
      for (std::size_t j = 0; j < 2; ++j) {
        const double w = set[j].predict(env[static_cast<Eigen::Index>(j)]);
        sum += -std::log(std::max(1e-3, std::abs(w - next.k[j])));
      }
      expected = cfg.diversity_scale * sum / 2.0;
    }
    ++counts[static_cast<int>(out.branch)];
    const bool sign_ok = out.branch == acord::RewardBranch::diversity
                             ? out.reward >= 0.0
                             : (out.reward < 0.0 || (out.branch == acord::RewardBranch::no_progress &&
                                                     cfg.progress_scale == 0.0));
    if (out.branch != branch || std::abs(out.reward - expected) > 1e-9 * std::max(1.0, std::abs(expected)) ||
        !sign_ok) {
      ++wrong;
    }
  }
  return {wrong == 0 && counts[0] > 0 && counts[1] > 0 && counts[2] > 0,
          str(trials, " inputs, ", wrong, " mismatches; branch counts failure=", counts[0],
              " no_progress=", counts[1], " diversity=", counts[2])};
}

// ---------------------------------------------------------------------------
// Analytic gradients against central differences.

struct GradientErrors {
  double discriminator = 0.0;
  double critic = 0.0;
  double actor = 0.0;
  double actor_with_entropy = 0.0;
};

inline GradientErrors gradient_errors(std::uint64_t seed) {
  using namespace acord;
  std::mt19937_64 rng(seed);
  GradientErrors e;
  // Large enough that roundoff (about 1e-16 * loss / h) stays well below the
  // tolerance for losses of order 10, small enough for truncation error.
  constexpr double h = 1e-5;

  {
    auto d = Discriminator<double>::initialized(0, {16, 16}, false, rng);
    const Eigen::VectorXd f = Eigen::VectorXd::Random(32);
    const Eigen::VectorXd t = (Eigen::VectorXd::Random(32).array() + 1.0).matrix() * 0.5;
    const auto [loss, grad] = batch_loss_and_grad(d, f, t, 1e-3);
    auto fn = [&](const Eigen::VectorXd& p) {
      Discriminator<double> probe(fa::Mlp<double>(d.net().spec(), p), 0);
      return batch_loss<double>(probe.predict(f), t, 1e-3).loss;
    };
    e.discriminator = oracle::max_relative_error(grad, oracle::central_differences(fn, d.net().params(), h));
  }

  const std::size_t obs = 5;
  const std::size_t act = 2;
  auto critics = sac::CriticPair<double>::initialized(obs, act, {16, 16}, rng);
  auto actor = sac::ActorPolicy<double>::initialized(obs, act, {16, 16}, rng);
  const Eigen::MatrixXd states = Eigen::MatrixXd::Random(obs, 24);
  {
    const Eigen::MatrixXd actions = Eigen::MatrixXd::Random(act, 24);
    const Eigen::VectorXd y = Eigen::VectorXd::Random(24);
    const auto r = sac::critic_loss(critics.q1, states, actions, y);
    auto fn = [&](const Eigen::VectorXd& p) {
      const fa::Mlp<double> q(critics.q1.spec(), p);
      Eigen::MatrixXd in(obs + act, 24);
      in << states, actions;
      const Eigen::VectorXd out = q.forward(in).row(0).transpose();
      return (out - y).squaredNorm() / 24.0;
    };
    e.critic = oracle::max_relative_error(r.grad, oracle::central_differences(fn, critics.q1.params(), h));
  }
  const Eigen::MatrixXd noise = sac::gaussian_noise<double>(act, 24, rng);
  for (double alpha : {0.0, 0.2}) {
    const auto r = sac::actor_loss(actor, critics, states, noise, alpha);
    auto fn = [&](const Eigen::VectorXd& p) {
      // Independent forward evaluation of mean(alpha log pi - min(Q1, Q2)).
      const fa::Mlp<double> net(actor.net().spec(), p);
      const Eigen::MatrixXd out = net.forward(states);
      double total = 0.0;
      for (Eigen::Index b = 0; b < 24; ++b) {
        Eigen::VectorXd a(act);
        double logp = 0.0;
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(act); ++i) {
          const double ls = std::clamp(out(act + i, b), sac::kLogStdMin, sac::kLogStdMax);
          const double u = out(i, b) + std::exp(ls) * noise(i, b);
          a[i] = std::tanh(u);
          logp += -0.5 * noise(i, b) * noise(i, b) - ls - 0.5 * std::log(2.0 * std::numbers::pi) -
                  std::log(1.0 - a[i] * a[i] + sac::kSquashEps);
        }
        Eigen::VectorXd in(obs + act);
        in << states.col(b), a;
        const double q1 = critics.q1.forward(Eigen::MatrixXd(in))(0, 0);
        const double q2 = critics.q2.forward(Eigen::MatrixXd(in))(0, 0);
        total += alpha * logp - std::min(q1, q2);
      }
      return total / 24.0;
    };
    const double err = oracle::max_relative_error(r.grad, oracle::central_differences(fn, actor.net().params(), h));
    (alpha == 0.0 ? e.actor : e.actor_with_entropy) = err;
  }
  return e;
}

inline Verdict gradient_oracle(std::uint64_t seed) {
  const auto e = gradient_errors(seed);
  const double worst = std::max({e.discriminator, e.critic, e.actor, e.actor_with_entropy});
  return {worst <= 1e-3, str("max relative error: discriminator ", e.discriminator, ", critic ", e.critic,
                             ", actor ", e.actor, ", actor+entropy ", e.actor_with_entropy, " (limit 1e-3)")};
}

// ---------------------------------------------------------------------------
// One-step bandit with reward -(a - 0.3)^2.

inline double bandit_deterministic_action(std::size_t updates, std::uint64_t seed) {
  using namespace acord;
  std::mt19937_64 rng(seed);
  sac::SacConfig cfg;
  cfg.hidden = {32, 32};
  cfg.batch_size = 64;
  cfg.lr = 1e-3;
  cfg.gamma = 0.0;
  sac::SoftActorCritic<float> learner(1, 1, cfg, rng);
  sac::ReplayBuffer<float> buffer(1, 1, 10'000);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  const Eigen::VectorXd s = Eigen::VectorXd::Ones(1);
  auto reward = [](double a) { return -(a - 0.3) * (a - 0.3); };
  // Half the data comes from the current policy, half is uniform exploration.
  for (std::size_t i = 0; i < 1000; ++i) {
    Eigen::VectorXd a(1);
    a[0] = uniform(rng);
    buffer.add(s, a, s, reward(a[0]), true);
  }
  for (std::size_t u = 0; u < updates; ++u) {
    Eigen::VectorXd a = u % 2 ? learner.actor().act_normalized(s, sac::ActionMode::stochastic, rng)
                              : Eigen::VectorXd::Constant(1, uniform(rng));
    buffer.add(s, a, s, reward(a[0]), true);
    learner.update(buffer, rng);
  }
  return learner.actor().act_deterministic(s)[0];
}

inline Verdict learner_sanity(std::size_t updates = 5000, std::uint64_t seed = 3) {
  const double a = bandit_deterministic_action(updates, seed);
  return {std::abs(a - 0.3) <= 0.05, str("deterministic action ", a, " after ", updates, " updates (target 0.3 +- 0.05)")};
}

// ---------------------------------------------------------------------------
// Coverage and consistency.

inline std::vector<acord::PainterState> trace_states(const acord::Shape& s, const Eigen::Vector2d& offset, double height,
                                                     double pitch) {
  std::vector<acord::PainterState> out;
  for (const auto& p : s.waypoints) {
    acord::PainterState st;
    st.brush_position = p + offset;
    st.brush_height = height;
    st.brush_pitch = pitch;
    out.push_back(st);
  }
  return out;
}

inline acord::StrokeRaster random_raster(std::mt19937_64& rng, int res, const acord::PainterParams& p) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<acord::PainterState> traj;
  acord::PainterState st;
  st.brush_position = {0.2 + 0.6 * unit(rng), 0.2 + 0.6 * unit(rng)};
  const int strokes = 2 + static_cast<int>(unit(rng) * 40);
  for (int i = 0; i < strokes; ++i) {
    st.brush_position += Eigen::Vector2d(0.2 * unit(rng) - 0.1, 0.2 * unit(rng) - 0.1);
    st.brush_position = st.brush_position.cwiseMax(0.0).cwiseMin(1.0);
    st.brush_height = p.z_contact * 1.2 * unit(rng);
    st.brush_pitch = (unit(rng) - 0.5) * 2.0;
    traj.push_back(st);
  }
  return acord::render_stroke(traj, p, res);
}

inline Verdict metrics_oracle(const acord::Shape& shape) {
  using namespace acord;
  const PainterParams p;
  const MetricsConfig m;
  Verdict v{true, ""};

  const StrokeRaster perfect = render_stroke(trace_states(shape, {0, 0}, 0.0, 0.0), p, m.resolution);
  const auto aligned = score_raster(perfect, shape, m);
  const bool perfect_ok = std::abs(aligned.coverage - 1.0) <= 0.01 && aligned.consistency == 1.0 &&
                          aligned.best_shift == RigidShift{};
  v.detail += str("perfect trace coverage ", aligned.coverage);

  // A trace displaced by exactly one step of the shift grid. A thin stroke and
  // a tolerance below the step make the displacement visible to raw coverage.
  MetricsConfig tight = m;
  tight.tolerance = 0.003;
  tight.shift_step = 0.01;
  const double thin_height = p.z_contact * (1.0 - tight.tolerance / p.w_max);
  const Eigen::Vector2d offset(tight.shift_step, 0.0);
  const StrokeRaster moved = render_stroke(trace_states(shape, offset, thin_height, 0.0), p, m.resolution);
  const auto r = score_raster(moved, shape, tight);
  const bool offset_ok = r.coverage < 1.0 && r.consistency == 1.0 && r.best_shift == RigidShift{-offset.x(), 0.0, 0.0};
  v.detail += str("; one-step offset (", offset.x(), ",0) coverage ", r.coverage, " consistency ", r.consistency,
                  " best shift (", r.best_shift.dx, ",", r.best_shift.dy, ",", r.best_shift.dtheta, ")");

  std::mt19937_64 rng(17);
  const auto shifts = symmetric_grid(0.02, 0.01);
  const auto rots = symmetric_grid(2.0 * std::numbers::pi / 180.0, 1.0 * std::numbers::pi / 180.0);
  std::size_t violations = 0;
  for (int i = 0; i < 100; ++i) {
    const StrokeRaster raster = random_raster(rng, 128, p);
    const auto c = consistency(raster, shape, shifts, rots, m.tolerance);
    if (c.consistency < c.coverage || c.coverage < 0.0 || c.consistency > 1.0) ++violations;
  }
  v.detail += str("; random rasters with consistency < coverage: ", violations, "/100");
  v.pass = perfect_ok && offset_ok && violations == 0;
  return v;
}

// ---------------------------------------------------------------------------
// Shared-autonomy contracts.

inline double simplex_error(const acord::SABelief& b) {
  double sum = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!(b[i] >= 0.0)) return 1.0;
    sum += b[i];
  }
  worst = std::abs(sum - 1.0);
  return worst;
}

/// Runs the blended controller with a user who always steers toward `goal`.
inline acord::SABelief steer_toward(std::size_t goal, std::size_t updates, const acord::Shape& shape) {
  using namespace acord;
  const PainterParams p;
  const StyleLibrary lib;
  const SAParams sa;
  SABelief belief(lib.size());
  PainterState s = painter_reset(shape, p);
  for (std::size_t t = 0; t < updates; ++t) {
    const UserCommand u = goal_command(lib[goal], s, p, sa.gain);
    belief = sa_update_belief(belief, u, s, lib, p, sa);
    const UserCommand assist = sa_assist(belief, s, lib, p, sa);
    const auto r = painter_step(s, sa_action(sa_blend(u, assist, sa.alpha), s, shape, p), shape, p);
    s = r.next_state;
    if (r.terminated) s = painter_reset(shape, p, s.brush_height, s.brush_pitch);
  }
  return belief;
}

inline Verdict sa_contracts(const acord::Shape& shape) {
  using namespace acord;
  const PainterParams p;
  const StyleLibrary lib;
  const SAParams sa;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  double worst = 0.0;
  SABelief b(lib.size());
  for (int i = 0; i < 10'000; ++i) {
    PainterState s;
    place_brush_tip(s, {unit(rng), unit(rng)}, p.z_max * unit(rng), p.pitch_max * (2.0 * unit(rng) - 1.0), p);
    const UserCommand u{4.0 * unit(rng) - 2.0, 4.0 * unit(rng) - 2.0};
    SAParams noisy = sa;
    noisy.beta = 50.0 * unit(rng);
    b = sa_update_belief(b, u, s, lib, p, noisy);
    worst = std::max(worst, simplex_error(b));
  }

  std::size_t blend_mismatch = 0;
  for (int i = 0; i < 1000; ++i) {
    const UserCommand assist{2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0};
    const UserCommand out = sa_blend({0.0, 0.0}, assist, 0.5);
    if (out[0] != assist[0] / 2.0 || out[1] != assist[1] / 2.0) ++blend_mismatch;
  }

  double weakest = 1.0;
  std::size_t wrong_argmax = 0;
  for (std::size_t g = 0; g < lib.size(); ++g) {
    const SABelief end = steer_toward(g, 50, shape);
    weakest = std::min(weakest, end[g]);
    wrong_argmax += end.argmax() == g ? 0 : 1;
  }
  return {worst <= 1e-9 && blend_mismatch == 0 && weakest > 0.9 && wrong_argmax == 0,
          str("simplex error max ", worst, " over 10000 updates; half-blend mismatches ", blend_mismatch,
              "/1000; min goal mass after 50 steered updates ", weakest, " (", wrong_argmax, " wrong argmax)")};
}

// ---------------------------------------------------------------------------
// Session replay.

inline std::vector<acord::ScheduledMessage> alternating_k_schedule(std::size_t every, std::size_t until) {
  std::vector<acord::ScheduledMessage> out;
  for (std::size_t t = 0, i = 0; t < until; t += every, ++i) {
    out.push_back({t, acord::SetKMessage{{i % 2 ? 0.9 : 0.1, i % 3 ? 0.2 : 0.8}}});
  }
  return out;
}

/// Scripted session -> stored record -> replay through a fresh session built from `setup`.
inline Verdict replay_roundtrip(const acord::SessionSetup& setup, const std::vector<acord::ScheduledMessage>& schedule,
                                const std::filesystem::path& dir, const std::string& id) {
  using namespace acord;
  PaintSession session(setup);
  run_scripted(session, schedule);
  SessionRecord rec = make_record(session, id);
  save_record(dir, rec, render_record(rec, setup.painter, 64));
  const SessionRecord loaded = load_record(dir / (id + ".json"));
  const ReplayResult r = replay(loaded, setup);
  return {r.identical && r.ticks == loaded.ticks.size() && !loaded.ticks.empty(),
          str(to_string(setup.condition), ": ", loaded.ticks.size(), " ticks recorded, ", r.ticks, " replayed, ",
              r.identical ? "identical" : "diverged", r.first_mismatch ? str(" at tick ", *r.first_mismatch) : "")};
}

}  // namespace criteria
