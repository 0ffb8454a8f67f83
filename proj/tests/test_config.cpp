#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "acord/config.hpp"
#include "criteria.hpp"

using namespace acord;

TEST(TomlReader, TablesArraysAndScalars) {
  const auto doc = toml::parse(R"(
# comment
name = "x"   # trailing comment
n = 1_000
f = -2.5e-1
yes = true
list = [1, 2,
        3]
[a.b]
c = 'literal \n'
inline = { p = 1, q = "two" }
[[items]]
v = 1
[[items]]
v = 2
)");
  EXPECT_EQ(doc["name"], "x");
  EXPECT_EQ(doc["n"], 1000);
  EXPECT_DOUBLE_EQ(doc["f"].get<double>(), -0.25);
  EXPECT_EQ(doc["yes"], true);
  EXPECT_EQ(doc["list"].size(), 3u);
  EXPECT_EQ(doc["a"]["b"]["c"], "literal \\n");
  EXPECT_EQ(doc["a"]["b"]["inline"]["q"], "two");
  ASSERT_EQ(doc["items"].size(), 2u);
  EXPECT_EQ(doc["items"][1]["v"], 2);
}

TEST(TomlReader, RejectsMalformedInput) {
  EXPECT_THROW(toml::parse("a = \"open"), ConfigError);
  EXPECT_THROW(toml::parse("a = 1\na = 2"), ConfigError);
  EXPECT_THROW(toml::parse("a 1"), ConfigError);
  EXPECT_THROW(toml::parse("a = [1, 2"), ConfigError);
  EXPECT_THROW(toml::parse("a = 12abc"), ConfigError);
}

TEST(ExperimentConfigTest, DefaultsAreValid) {
  const auto cfg = parse_config("");
  EXPECT_EQ(cfg.environment, EnvKind::cruise);
  EXPECT_EQ(cfg.features.size(), 2u);
  EXPECT_EQ(cfg.styles.size(), 6u);
}

TEST(ExperimentConfigTest, ShippedConfigsLoad) {
  const auto cruise = load_config(oracle::source_path("configs/cruise.toml"));
  EXPECT_EQ(cruise.environment, EnvKind::cruise);
  EXPECT_EQ(cruise.sac.hidden, (decltype(cruise.sac.hidden){64, 64}));
  EXPECT_EQ(cruise.features.names, (std::vector<std::string>{"speed", "tilt"}));

  const auto painter = load_config(oracle::source_path("configs/painter.toml"));
  EXPECT_EQ(painter.environment, EnvKind::painter);
  EXPECT_EQ(painter.acord.effective_resample_interval(painter.episode_cap()), 150u);
  EXPECT_NEAR(painter.painter.pitch_max, 60.0 * std::numbers::pi / 180.0, 1e-15);
  EXPECT_NEAR(painter.metrics.rotation_step, 0.5 * std::numbers::pi / 180.0, 1e-15);
  const auto shapes = painter.load_shapes();
  ASSERT_EQ(shapes.size(), 2u);
  EXPECT_EQ(shapes[0].name, "heart");
}

TEST(ExperimentConfigTest, NonPositiveProgressPenaltyIsRejected) {
  for (const auto* c : {"0.0", "-1.0"}) {
    try {
      parse_config(std::string("[acord]\nprogress_penalty = ") + c + "\n");
      FAIL() << "accepted c = " << c;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find("progress_penalty"), std::string::npos) << e.what();
    }
  }
}

TEST(ExperimentConfigTest, NonNegativeFailureRewardIsRejected) {
  EXPECT_THROW(parse_config("[cruise]\ncrash_reward = 0.0\n"), ConfigError);
  EXPECT_THROW(parse_config("environment = \"painter\"\n[painter]\nfailure_penalty = 5.0\n"), ConfigError);
}

TEST(ExperimentConfigTest, UnknownKeysNameTheField) {
  try {
    parse_config("[sac]\nhiden = [4]\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sac.hiden"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config("environment = \"boat\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[sac]\nbatch_size = \"big\"\n"), ConfigError);
}

TEST(ExperimentConfigTest, StylesFromArrayOfTables) {
  std::string text;
  for (int i = 0; i < 6; ++i) {
    text += "[[styles]]\nheight = " + std::to_string(0.005 * i) + "\npitch_deg = " + std::to_string(5 * i) +
            "\nlabel = \"s" + std::to_string(i) + "\"\n";
  }
  const auto cfg = parse_config(text);
  ASSERT_EQ(cfg.styles.size(), 6u);
  EXPECT_NEAR(cfg.styles[5].pitch, 25.0 * std::numbers::pi / 180.0, 1e-12);
  EXPECT_EQ(cfg.styles[2].thumbnail, "style2");
  EXPECT_THROW(parse_config("[[styles]]\nheight = 0.0\n"), ConfigError);
}

TEST(ExperimentConfigTest, HashTracksResultAffectingSettingsOnly) {
  const auto a = parse_config("seed = 1\n");
  const auto b = parse_config("seed = 1\n[server]\nport = 9000\n");
  const auto c = parse_config("seed = 2\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash(), parse_config("seed = 1\n[acord]\ntotal_steps = 5\n").hash());
  EXPECT_NE(a.hash(), parse_config("seed = 1\n[acord]\nwarmup_steps = 5\n").hash());
}
