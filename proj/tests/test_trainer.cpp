#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "acord/envs/tasks.hpp"
#include "acord/trainer.hpp"
#include "criteria.hpp"

using namespace acord;

namespace {

sac::SacConfig small_sac() {
  sac::SacConfig c;
  c.hidden = {16, 16};
  c.batch_size = 32;
  return c;
}

DiscriminatorConfig small_disc() {
  DiscriminatorConfig c;
  c.hidden = {8, 8};
  c.batch_size = 32;
  return c;
}

AcordConfig small_cfg(std::size_t steps, std::uint64_t seed = 1) {
  AcordConfig c;
  c.total_steps = steps;
  c.warmup_steps = 100;
  c.seed = seed;
  return c;
}

CruiseTask short_cruise(std::size_t cap = 50) {
  CruiseParams p;
  p.episode_cap = cap;
  return CruiseTask(p);
}

using CruiseTrainer = AcordTrainer<CruiseTask>;

CruiseTrainer make_trainer(std::size_t steps, std::uint64_t seed = 1, std::size_t cap = 50) {
  return CruiseTrainer(short_cruise(cap), make_feature_map({kCruiseSpeed, kCruiseTilt}), small_cfg(steps, seed),
                       small_sac(), small_disc());
}

// Cruise dynamics but the observation turns to NaN after a few steps.
class PoisonedTask {
 public:
  std::size_t observation_size() const { return 2; }
  std::size_t action_size() const { return 2; }
  std::size_t episode_cap() const { return 20; }
  double failure_reward() const { return -100.0; }
  template <typename Rng>
  void reset(Rng&) { t_ = 0; }
  Eigen::VectorXd observe() const {
    Eigen::VectorXd o = Eigen::VectorXd::Constant(2, 0.1);
    if (t_ > 5) o[0] = std::numeric_limits<double>::quiet_NaN();
    return o;
  }
  TaskStep step(std::span<const double>) {
    ++t_;
    return {1.0, false, false, 1.0};
  }

 private:
  std::size_t t_ = 0;
};

}  // namespace

TEST(AcordReward, Examples) {
  std::mt19937_64 rng(1);
  const auto map = make_feature_map({0});
  DiscriminatorSet<float> set(map, small_disc(), rng);
  const AcordConfig cfg;
  const AugmentedState next{Eigen::Vector2d(0.3, 0.0), BehaviorOversightVector({0.4})};

  const auto crash = acord_reward(next, TaskStep{-100.0, true, true, 0.5}, set, cfg);
  EXPECT_EQ(crash.reward, -100.0);
  EXPECT_EQ(crash.branch, RewardBranch::failure);

  const auto stall = acord_reward(next, TaskStep{0.0, false, false, -2.0}, set, cfg);
  EXPECT_EQ(stall.reward, -1.0);
  EXPECT_EQ(stall.branch, RewardBranch::no_progress);
  EXPECT_EQ(acord_reward(next, TaskStep{0.0, false, false, 0.0}, set, cfg).branch, RewardBranch::no_progress);

  // Make W output exactly 1 everywhere so |W - k| = 1 at k = 0.
  auto& net = set[0].net();
  net.params().setZero();
  net.params()[net.params().size() - 1] = 1000.0f;
  const AugmentedState at_zero{Eigen::Vector2d(0.3, 0.0), BehaviorOversightVector({0.0})};
  const auto div = acord_reward(at_zero, TaskStep{0.1, false, false, 0.5}, set, cfg);
  EXPECT_EQ(div.branch, RewardBranch::diversity);
  EXPECT_EQ(div.reward, 0.0);
}

TEST(AcordReward, BranchSuiteOnRandomInputs) {
  const auto v = criteria::reward_branch_suite(10'000, 11);
  EXPECT_TRUE(v.pass) << v.detail;
}

TEST(AcordConfig, Validation) {
  AcordConfig c;
  EXPECT_NO_THROW(c.validate(200, -100.0));
  EXPECT_EQ(c.effective_resample_interval(200), 100u);
  EXPECT_EQ(c.effective_resample_interval(201), 101u);
  c.progress_penalty = 0.0;
  EXPECT_THROW(c.validate(200, -100.0), ConfigError);
  c = {};
  c.progress_penalty = -1.0;
  EXPECT_THROW(c.validate(200, -100.0), ConfigError);
  c = {};
  EXPECT_THROW(c.validate(200, 5.0), ConfigError);
  c.env_scale = 0.0;
  EXPECT_THROW(c.validate(200, -100.0), ConfigError);
  c = {};
  c.diversity_scale = -1.0;
  EXPECT_THROW(c.validate(200, -100.0), ConfigError);
  c = {};
  c.learner_interval = 0;
  EXPECT_THROW(c.validate(200, -100.0), ConfigError);
}

TEST(ResampleK, FiresOnMultiplesOfN) {
  std::mt19937_64 rng(2);
  EXPECT_TRUE(resample_k(10, 0, 2, rng).has_value());
  EXPECT_TRUE(resample_k(10, 10, 2, rng).has_value());
  EXPECT_FALSE(resample_k(10, 9, 2, rng).has_value());
  EXPECT_THROW(resample_k(0, 0, 2, rng), ConfigError);
  for (std::size_t cap : {200u, 201u, 7u}) {
    const AcordConfig c;
    const std::size_t n = c.effective_resample_interval(cap);
    std::size_t count = 0;
    for (std::size_t t = 0; t < cap; ++t) count += resample_k(n, t, 1, rng) ? 1 : 0;
    EXPECT_EQ(count, 2u) << "cap " << cap;
  }
}

TEST(Trainer, ZeroStepsGivesEmptyReportAndInitialCheckpointOnly) {
  auto trainer = make_trainer(0);
  std::vector<std::string> tags;
  const auto report = trainer.train([&](const Checkpoint&, std::string_view tag) { tags.emplace_back(tag); });
  EXPECT_TRUE(report.episodes.empty());
  EXPECT_TRUE(report.updates.empty());
  EXPECT_EQ(report.steps, 0u);
  EXPECT_EQ(tags, std::vector<std::string>{"initial"});
}

TEST(Trainer, BothBuffersSeeEveryTransition) {
  auto trainer = make_trainer(600);
  const auto report = trainer.train();
  EXPECT_EQ(report.learner_transitions, 600u);
  EXPECT_EQ(report.discriminator_transitions, 600u);
  EXPECT_EQ(trainer.replay().total_added(), trainer.discriminator_buffer().total_added());
  EXPECT_EQ(trainer.global_step(), 600u);
}

TEST(Trainer, EpisodeLengthsAccountForAllSteps) {
  auto trainer = make_trainer(777);
  const auto report = trainer.train();
  std::size_t total = 0;
  for (const auto& e : report.episodes) {
    EXPECT_GE(e.length, 1u);
    EXPECT_LE(e.length, 50u);
    if (e.failed) EXPECT_FALSE(e.succeeded);
    total += e.length;
  }
  EXPECT_LE(total, 777u);
  EXPECT_LT(777u - total, 50u);
}

TEST(Trainer, KIsConstantBetweenResamplePoints) {
  auto trainer = make_trainer(500, 3, 40);
  const std::size_t n = trainer.config().effective_resample_interval(40);
  const std::size_t env = trainer.env_dim();
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> seen;
  trainer.set_transition_hook([&](const Eigen::VectorXd& s, const Eigen::VectorXd&, const Eigen::VectorXd& s2,
                                  const RewardOutcome&) { seen.emplace_back(s, s2); });
  const auto report = trainer.train();
  ASSERT_EQ(seen.size(), 500u);
  for (const auto& e : report.episodes) {
    for (std::size_t t = 0; t < e.length; ++t) {
      const auto& [s, s2] = seen[e.start_step + t];
      // s and s' carry the same k within a transition.
      EXPECT_EQ(s.tail(2), s2.tail(2));
      if (t > 0 && t % n != 0) EXPECT_EQ(s.tail(2), seen[e.start_step + t - 1].first.tail(2)) << "t=" << t;
      for (Eigen::Index j = 0; j < 2; ++j) {
        EXPECT_GE(s[static_cast<Eigen::Index>(env) + j], 0.0);
        EXPECT_LE(s[static_cast<Eigen::Index>(env) + j], 1.0);
      }
    }
    // One k at reset, one every n steps after.
    EXPECT_EQ(e.k_schedule.size(), (e.length + n - 1) / n);
  }
}

TEST(Trainer, RewardsFollowTheBranchSigns) {
  auto trainer = make_trainer(400);
  std::size_t checked = 0;
  trainer.set_transition_hook([&](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&,
                                  const RewardOutcome& r) {
    ++checked;
    if (r.branch == RewardBranch::diversity) {
      EXPECT_GE(r.reward, 0.0);
    } else {
      EXPECT_LT(r.reward, 0.0);
    }
  });
  trainer.train();
  EXPECT_EQ(checked, 400u);
}

TEST(Trainer, SameSeedSameReport) {
  auto a = make_trainer(400, 9);
  auto b = make_trainer(400, 9);
  const auto ra = a.train();
  const auto rb = b.train();
  ASSERT_EQ(ra.episodes.size(), rb.episodes.size());
  for (std::size_t i = 0; i < ra.episodes.size(); ++i) {
    EXPECT_EQ(ra.episodes[i].length, rb.episodes[i].length);
    EXPECT_EQ(ra.episodes[i].acord_return, rb.episodes[i].acord_return);
    EXPECT_EQ(ra.episodes[i].k_schedule, rb.episodes[i].k_schedule);
  }
  EXPECT_EQ(a.learner().actor().net().params(), b.learner().actor().net().params());
  auto c = make_trainer(400, 10);
  c.train();
  EXPECT_NE(a.learner().actor().net().params(), c.learner().actor().net().params());
}

TEST(Trainer, PeriodicAndFinalCheckpoints) {
  AcordConfig cfg = small_cfg(250);
  cfg.checkpoint_interval = 100;
  CruiseTrainer t(short_cruise(), make_feature_map({0, 1}), cfg, small_sac(), small_disc());
  std::vector<std::pair<std::string, std::uint64_t>> seen;
  t.train([&](const Checkpoint& ck, std::string_view tag) { seen.emplace_back(std::string(tag), ck.step); });
  const std::vector<std::pair<std::string, std::uint64_t>> want{
      {"initial", 0}, {"periodic", 100}, {"periodic", 200}, {"final", 250}};
  EXPECT_EQ(seen, want);
}

TEST(Trainer, RestoreCarriesNetworksAndStep) {
  auto a = make_trainer(300, 4);
  a.train();
  const Checkpoint ck = a.checkpoint();
  auto b = make_trainer(300, 5);
  b.restore(ck);
  EXPECT_EQ(b.global_step(), 300u);
  EXPECT_EQ(b.learner().actor().net().params(), a.learner().actor().net().params());
  EXPECT_EQ(b.discriminators()[1].net().params(), a.discriminators()[1].net().params());
  EXPECT_EQ(b.replay().size(), 0u);
}

TEST(Trainer, NanLossAbortsWithDiagnosticCheckpoint) {
  AcordConfig cfg = small_cfg(400);
  cfg.warmup_steps = 10;
  AcordTrainer<PoisonedTask> trainer(PoisonedTask{}, make_feature_map({1}), cfg, small_sac(), small_disc());
  std::vector<std::string> tags;
  EXPECT_THROW(trainer.train([&](const Checkpoint&, std::string_view tag) { tags.emplace_back(tag); }),
               TrainingDiverged);
  ASSERT_FALSE(tags.empty());
  EXPECT_EQ(tags.back(), "diverged");
}

TEST(Trainer, RejectsMismatchedFeatureMaps) {
  EXPECT_THROW(CruiseTrainer(short_cruise(), make_feature_map({0, 1, 2}), small_cfg(10), small_sac(), small_disc()),
               ConfigError);
  EXPECT_THROW(CruiseTrainer(short_cruise(), make_feature_map({5}), small_cfg(10), small_sac(), small_disc()),
               ConfigError);
}

TEST(Evaluate, UntrainedPolicyProducesAReport) {
  std::mt19937_64 rng(6);
  const auto actor = sac::ActorPolicy<float>::initialized(4, 2, {16}, rng);
  CruiseTask task = short_cruise();
  const auto map = make_feature_map({0, 1});
  const auto s = evaluate_policy(task, actor, map, KSchedule::fixed(BehaviorOversightVector({0.5, 0.5})), 10, 1);
  EXPECT_EQ(s.episodes, 10u);
  EXPECT_GE(s.failure_rate, 0.0);
  EXPECT_LE(s.failure_rate, 1.0);
  EXPECT_EQ(s.returns.size(), 10u);
  ASSERT_EQ(s.feature_bins.size(), 2u);
  ASSERT_EQ(s.feature_bins[0].size(), 5u);
  EXPECT_EQ(s.feature_bins[0].front().k_low, 0.0);
  EXPECT_EQ(s.feature_bins[0].back().k_high, 1.0);
  // All samples have k = 0.5, which falls in the middle bin.
  std::size_t total = 0;
  for (std::size_t len : s.lengths) total += len;
  EXPECT_EQ(s.feature_bins[0][2].count, total);

  const auto again = evaluate_policy(task, actor, map, KSchedule::random(10), 10, 1);
  const auto same = evaluate_policy(task, actor, map, KSchedule::random(10), 10, 1);
  EXPECT_EQ(again.returns, same.returns);
}

TEST(KScheduleTest, StepwiseAndRandom) {
  std::mt19937_64 rng(7);
  const BehaviorOversightVector lo({0.1});
  const BehaviorOversightVector hi({0.9});
  const auto s = KSchedule::stepwise({{0, lo}, {5, hi}});
  EXPECT_EQ(*s.at(0, 1, rng), lo);
  EXPECT_FALSE(s.at(3, 1, rng).has_value());
  EXPECT_EQ(*s.at(5, 1, rng), hi);
  EXPECT_THROW(KSchedule::stepwise({{2, lo}}), ConfigError);
  EXPECT_THROW(KSchedule::random(0), ConfigError);
  const auto f = KSchedule::fixed(hi);
  EXPECT_EQ(*f.at(0, 1, rng), hi);
  EXPECT_FALSE(f.at(1, 1, rng).has_value());
}
