#pragma once

// Experiment configuration: a small TOML reader (tables, arrays of tables,
// dotted keys, strings, numbers, booleans, arrays, inline tables) producing a
// JSON document, plus the typed ExperimentConfig built from it.

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "acord/baselines.hpp"
#include "acord/discriminator.hpp"
#include "acord/envs/cruise.hpp"
#include "acord/envs/painter.hpp"
#include "acord/envs/shape.hpp"
#include "acord/envs/tasks.hpp"
#include "acord/error.hpp"
#include "acord/funcapprox.hpp"
#include "acord/kspace.hpp"
#include "acord/metrics.hpp"
#include "acord/sac.hpp"
#include "acord/trainer.hpp"

namespace acord {

using json = nlohmann::json;

namespace toml {

class Parser {
 public:
  explicit Parser(std::string text) : s_(std::move(text)) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_ws_and_comments(true);
      if (eof()) break;
      if (peek() == '[') {
        table = header(root);
      } else {
        key_value(*table);
      }
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + what);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }
  char get() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_ws_and_comments(bool newlines) {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
        get();
      } else if (c == '#') {
        while (!eof() && peek() != '\n') get();
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_ws_and_comments(false);
    if (eof()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "'");
    get();
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts;
    while (true) {
      skip_ws_and_comments(false);
      if (peek() == '"' || peek() == '\'') {
        parts.push_back(string_value());
      } else {
        std::string k;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
          k.push_back(get());
        }
        if (k.empty()) fail("expected a key");
        parts.push_back(k);
      }
      skip_ws_and_comments(false);
      if (peek() != '.') break;
      get();
    }
    return parts;
  }

  json* descend(json& root, const std::vector<std::string>& path, std::size_t count) {
    json* t = &root;
    for (std::size_t i = 0; i < count; ++i) {
      json& next = (*t)[path[i]];
      if (next.is_null()) next = json::object();
      if (next.is_array()) {
        if (next.empty() || !next.back().is_object()) fail("'" + path[i] + "' is not a table");
        t = &next.back();
      } else if (next.is_object()) {
        t = &next;
      } else {
        fail("'" + path[i] + "' is not a table");
      }
    }
    return t;
  }

  json* header(json& root) {
    get();
    const bool array = peek() == '[';
    if (array) get();
    const auto path = dotted_key();
    if (get() != ']' || (array && get() != ']')) fail("malformed table header");
    json* parent = descend(root, path, path.size() - 1);
    json& slot = (*parent)[path.back()];
    if (array) {
      if (slot.is_null()) slot = json::array();
      if (!slot.is_array()) fail("'" + path.back() + "' redefined as an array of tables");
      slot.push_back(json::object());
      return &slot.back();
    }
    if (slot.is_null()) slot = json::object();
    if (!slot.is_object()) fail("'" + path.back() + "' redefined as a table");
    return &slot;
  }

  void key_value(json& table) {
    const auto path = dotted_key();
    if (peek() != '=') fail("expected '=' after key");
    get();
    skip_ws_and_comments(false);
    json* t = descend(table, path, path.size() - 1);
    if (t->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*t)[path.back()] = value();
  }

  json value() {
    const char c = peek();
    if (c == '"' || c == '\'') return string_value();
    if (c == '[') return array_value();
    if (c == '{') return inline_table();
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return number_value();
  }

  std::string string_value() {
    const char quote = get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == quote) break;
      if (c == '\\' && quote == '"') {
        const char e = get();
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  json array_value() {
    get();
    json arr = json::array();
    while (true) {
      skip_ws_and_comments(true);
      if (peek() == ']') {
        get();
        return arr;
      }
      arr.push_back(value());
      skip_ws_and_comments(true);
      if (peek() == ',') {
        get();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json inline_table() {
    get();
    json t = json::object();
    skip_ws_and_comments(false);
    if (peek() == '}') {
      get();
      return t;
    }
    while (true) {
      key_value(t);
      skip_ws_and_comments(false);
      const char c = get();
      if (c == '}') return t;
      if (c != ',') fail("expected ',' or '}' in inline table");
    }
  }

  json number_value() {
    std::string tok;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
        tok.push_back(get());
      } else {
        break;
      }
    }
    std::string clean;
    for (char c : tok) {
      if (c != '_') clean.push_back(c);
    }
    if (clean.empty()) fail("expected a value");
    if (clean == "inf" || clean == "+inf") return std::numeric_limits<double>::infinity();
    if (clean == "-inf") return -std::numeric_limits<double>::infinity();
    if (clean == "nan" || clean == "+nan" || clean == "-nan") return std::numeric_limits<double>::quiet_NaN();
    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    std::size_t used = 0;
    try {
      if (is_float) {
        const double v = std::stod(clean, &used);
        if (used == clean.size()) return v;
      } else {
        const long long v = std::stoll(clean, &used);
        if (used == clean.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("bad value '" + tok + "'");
  }

  std::string s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

inline json parse(const std::string& text) { return Parser(text).parse(); }

inline json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace toml

/// Reads typed fields out of one table and remembers which keys were used so
/// leftovers can be reported as unknown.
class TableReader {
 public:
  TableReader(const json& table, std::string prefix) : t_(table), prefix_(std::move(prefix)) {
    if (!t_.is_null() && !t_.is_object()) throw ConfigError("'" + prefix_ + "' must be a table");
  }

  bool has(const std::string& key) const { return t_.is_object() && t_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    used_.insert(key);
    const json& v = t_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if (std::is_unsigned_v<T> && v.get<long long>() < 0) throw std::invalid_argument("must be >= 0");
        out = v.get<T>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
        out = v.get<T>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
        out = v.get<std::string>();
      } else {
        out = v.get<T>();
      }
    } catch (const std::exception& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  /// Stored in degrees, returned in radians.
  void read_degrees(const std::string& key, double& radians) {
    if (!has(key)) return;
    double deg = radians * 180.0 / std::numbers::pi;
    read(key, deg);
    radians = deg * std::numbers::pi / 180.0;
  }

  const json& sub(const std::string& key) {
    static const json kNull;
    if (!has(key)) return kNull;
    used_.insert(key);
    return t_.at(key);
  }

  std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  void finish() const {
    if (!t_.is_object()) return;
    for (const auto& [k, v] : t_.items()) {
      if (!used_.count(k)) throw ConfigError("unknown config key '" + field(k) + "'");
    }
  }

 private:
  const json& t_;
  std::string prefix_;
  std::set<std::string> used_;
};

struct ServerConfig {
  double tick_hz = 20.0;
  int port = 8080;
  std::string session_dir = "sessions";
  std::size_t queue_capacity = 64;

  void validate() const {
    if (!(tick_hz > 0.0 && tick_hz <= 1000.0)) throw ConfigError("server.tick_hz must be in (0, 1000]");
    if (port < 0 || port > 65535) throw ConfigError("server.port must be in [0, 65535]");
    if (queue_capacity < 1) throw ConfigError("server.queue_capacity must be >= 1");
  }
};

enum class EnvKind { cruise, painter };

struct ExperimentConfig {
  EnvKind environment = EnvKind::cruise;
  CruiseParams cruise;
  CruiseTask::Options cruise_options;
  PainterParams painter;
  PainterTask::Options painter_options;
  std::string shapes_dir = "data/shapes";
  std::vector<std::string> shapes{"heart", "house"};
  FeatureMap features;
  AcordConfig acord;
  sac::SacConfig sac;
  DiscriminatorConfig discriminator;
  std::vector<Style> styles = StyleLibrary::default_styles();
  SAParams sa;
  MetricsConfig metrics;
  ServerConfig server;
  std::string out_dir = "runs";
  std::filesystem::path base_dir = ".";  // relative paths resolve against this

  std::size_t episode_cap() const { return environment == EnvKind::cruise ? cruise.episode_cap : painter.step_cap; }
  double failure_reward() const {
    return environment == EnvKind::cruise ? cruise.crash_reward : painter.failure_penalty;
  }
  std::size_t observation_size() const {
    return environment == EnvKind::cruise ? kCruiseObservationSize : kPainterObservationSize;
  }

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  std::vector<Shape> load_shapes() const {
    std::vector<Shape> out;
    for (const auto& name : shapes) out.push_back(load_named_shape(resolve(shapes_dir), name));
    return out;
  }

  void validate() const {
    features.validate(observation_size());
    acord.validate(episode_cap(), failure_reward());
    sac.validate();
    discriminator.validate();
    StyleLibrary(styles).validate(painter);
    sa.validate();
    metrics.validate();
    server.validate();
    if (environment == EnvKind::painter && shapes.empty()) throw ConfigError("painter.shapes must not be empty");
    if (cruise.episode_cap < 1 || painter.step_cap < 1) throw ConfigError("episode caps must be >= 1");
    if (!(cruise.dt > 0.0)) throw ConfigError("cruise.dt must be > 0");
    if (!(painter.waypoint_tolerance > 0.0)) throw ConfigError("painter.waypoint_tolerance must be > 0");
    if (!(painter.z_contact > 0.0 && painter.z_contact <= painter.z_max)) {
      throw ConfigError("painter.z_contact must be in (0, z_max]");
    }
  }

  /// Fully resolved settings; the hash covers exactly this document.
  json effective() const {
    json j;
    j["environment"] = environment == EnvKind::cruise ? "cruise" : "painter";
    j["seed"] = acord.seed;
    j["cruise"] = {{"dt", cruise.dt},
                   {"v_max", cruise.v_max},
                   {"accel_max", cruise.accel_max},
                   {"tilt_rate_max", cruise.tilt_rate_max},
                   {"tilt_max", cruise.tilt_max},
                   {"crash_reward", cruise.crash_reward},
                   {"episode_cap", cruise.episode_cap},
                   {"reset_speed_max", cruise_options.reset_speed_max},
                   {"reset_tilt_max", cruise_options.reset_tilt_max}};
    j["painter"] = {{"z_max", painter.z_max},
                    {"z_contact", painter.z_contact},
                    {"w_max", painter.w_max},
                    {"pitch_max", painter.pitch_max},
                    {"brush_length", painter.brush_length},
                    {"v_xy_max", painter.v_xy_max},
                    {"v_z_max", painter.v_z_max},
                    {"v_pitch_max", painter.v_pitch_max},
                    {"waypoint_tolerance", painter.waypoint_tolerance},
                    {"step_cap", painter.step_cap},
                    {"failure_penalty", painter.failure_penalty},
                    {"randomize_start", painter_options.randomize_start},
                    {"random_shape", painter_options.random_shape},
                    {"shapes", shapes}};
    std::vector<std::size_t> idx;
    for (const auto& e : features.entries) idx.push_back(e.state_index);
    j["features"] = {{"indices", idx}, {"names", features.names}};
    j["acord"] = {{"resample_interval", acord.effective_resample_interval(episode_cap())},
                  {"progress_penalty", acord.progress_penalty},
                  {"env_scale", acord.env_scale},
                  {"progress_scale", acord.progress_scale},
                  {"diversity_scale", acord.diversity_scale},
                  {"learner_interval", acord.learner_interval},
                  {"discriminator_interval", acord.discriminator_interval},
                  {"total_steps", acord.total_steps},
                  {"warmup_steps", acord.warmup_steps},
                  {"success_is_terminal", acord.success_is_terminal}};
    j["sac"] = {{"hidden", sac.hidden},
                {"gamma", sac.gamma},
                {"tau", sac.tau},
                {"lr", sac.lr},
                {"batch_size", sac.batch_size},
                {"replay_capacity", sac.replay_capacity},
                {"initial_temperature", sac.initial_temperature},
                {"learn_temperature", sac.learn_temperature}};
    if (sac.target_entropy) j["sac"]["target_entropy"] = *sac.target_entropy;
    j["discriminator"] = {{"hidden", discriminator.hidden},
                          {"epsilon", discriminator.epsilon},
                          {"delta", discriminator.delta},
                          {"lr", discriminator.lr},
                          {"batch_size", discriminator.batch_size},
                          {"capacity", discriminator.capacity},
                          {"monotone_init", discriminator.monotone_init}};
    json st = json::array();
    for (const auto& s : styles) {
      st.push_back({{"height", s.height}, {"pitch", s.pitch}, {"label", s.label}, {"thumbnail", s.thumbnail}});
    }
    j["styles"] = st;
    j["sa"] = {{"alpha", sa.alpha}, {"beta", sa.beta}, {"gain", sa.gain}};
    j["metrics"] = {{"tolerance", metrics.tolerance},
                    {"resolution", metrics.resolution},
                    {"shift_max", metrics.shift_max},
                    {"shift_step", metrics.shift_step},
                    {"rotation_max", metrics.rotation_max},
                    {"rotation_step", metrics.rotation_step}};
    return j;
  }

  /// Server and path settings do not affect results and are left out. The run
  /// length is left out too so a finished run can be extended by resuming.
  std::uint64_t hash() const {
    json j = effective();
    j["acord"].erase("total_steps");
    return fa::fnv1a(j.dump());
  }
};

inline FeatureMap default_feature_map(EnvKind env) {
  if (env == EnvKind::cruise) return make_feature_map({kCruiseSpeed, kCruiseTilt}, {"speed", "tilt"});
  return make_feature_map({kPainterHeight, kPainterPitch}, {"height", "pitch"});
}

inline ExperimentConfig config_from_json(const json& doc, std::filesystem::path base_dir = ".") {
  ExperimentConfig cfg;
  cfg.base_dir = std::move(base_dir);
  TableReader root(doc, "");

  std::string env = "cruise";
  root.read("environment", env);
  if (env == "cruise") {
    cfg.environment = EnvKind::cruise;
  } else if (env == "painter") {
    cfg.environment = EnvKind::painter;
  } else {
    throw ConfigError("environment: expected \"cruise\" or \"painter\", got \"" + env + "\"");
  }
  root.read("seed", cfg.acord.seed);
  root.read("out_dir", cfg.out_dir);

  {
    TableReader t(root.sub("cruise"), "cruise");
    t.read("dt", cfg.cruise.dt);
    t.read("v_max", cfg.cruise.v_max);
    t.read("accel_max", cfg.cruise.accel_max);
    t.read("tilt_rate_max", cfg.cruise.tilt_rate_max);
    t.read("tilt_max", cfg.cruise.tilt_max);
    t.read("crash_reward", cfg.cruise.crash_reward);
    t.read("episode_cap", cfg.cruise.episode_cap);
    t.read("reset_speed_max", cfg.cruise_options.reset_speed_max);
    t.read("reset_tilt_max", cfg.cruise_options.reset_tilt_max);
    t.finish();
  }
  {
    TableReader t(root.sub("painter"), "painter");
    t.read("z_max", cfg.painter.z_max);
    t.read("z_contact", cfg.painter.z_contact);
    t.read("w_max", cfg.painter.w_max);
    t.read_degrees("pitch_max_deg", cfg.painter.pitch_max);
    t.read("brush_length", cfg.painter.brush_length);
    t.read("v_xy_max", cfg.painter.v_xy_max);
    t.read("v_z_max", cfg.painter.v_z_max);
    t.read("v_pitch_max", cfg.painter.v_pitch_max);
    t.read("waypoint_tolerance", cfg.painter.waypoint_tolerance);
    t.read("step_cap", cfg.painter.step_cap);
    t.read("failure_penalty", cfg.painter.failure_penalty);
    t.read("randomize_start", cfg.painter_options.randomize_start);
    t.read("random_shape", cfg.painter_options.random_shape);
    t.read("shapes_dir", cfg.shapes_dir);
    t.read("shapes", cfg.shapes);
    t.finish();
  }
  cfg.styles = StyleLibrary::default_styles(cfg.painter);
  {
    TableReader t(root.sub("features"), "features");
    cfg.features = default_feature_map(cfg.environment);
    if (t.has("indices")) {
      std::vector<std::size_t> idx;
      std::vector<std::string> names;
      t.read("indices", idx);
      t.read("names", names);
      cfg.features = make_feature_map(idx, names);
    }
    t.finish();
  }
  {
    TableReader t(root.sub("acord"), "acord");
    t.read("resample_interval", cfg.acord.resample_interval);
    t.read("progress_penalty", cfg.acord.progress_penalty);
    t.read("env_scale", cfg.acord.env_scale);
    t.read("progress_scale", cfg.acord.progress_scale);
    t.read("diversity_scale", cfg.acord.diversity_scale);
    t.read("learner_interval", cfg.acord.learner_interval);
    t.read("discriminator_interval", cfg.acord.discriminator_interval);
    t.read("total_steps", cfg.acord.total_steps);
    t.read("warmup_steps", cfg.acord.warmup_steps);
    t.read("checkpoint_interval", cfg.acord.checkpoint_interval);
    t.read("loss_log_interval", cfg.acord.loss_log_interval);
    t.read("success_is_terminal", cfg.acord.success_is_terminal);
    t.finish();
  }
  {
    TableReader t(root.sub("sac"), "sac");
    t.read("hidden", cfg.sac.hidden);
    t.read("gamma", cfg.sac.gamma);
    t.read("tau", cfg.sac.tau);
    t.read("lr", cfg.sac.lr);
    t.read("batch_size", cfg.sac.batch_size);
    t.read("replay_capacity", cfg.sac.replay_capacity);
    t.read("initial_temperature", cfg.sac.initial_temperature);
    t.read("learn_temperature", cfg.sac.learn_temperature);
    if (t.has("target_entropy")) {
      double h = 0.0;
      t.read("target_entropy", h);
      cfg.sac.target_entropy = h;
    }
    t.finish();
  }
  {
    TableReader t(root.sub("discriminator"), "discriminator");
    t.read("hidden", cfg.discriminator.hidden);
    t.read("epsilon", cfg.discriminator.epsilon);
    t.read("delta", cfg.discriminator.delta);
    t.read("lr", cfg.discriminator.lr);
    t.read("batch_size", cfg.discriminator.batch_size);
    t.read("capacity", cfg.discriminator.capacity);
    t.read("monotone_init", cfg.discriminator.monotone_init);
    t.finish();
  }
  if (const json& st = root.sub("styles"); !st.is_null()) {
    if (!st.is_array()) throw ConfigError("styles must be an array of tables ([[styles]])");
    cfg.styles.clear();
    for (std::size_t i = 0; i < st.size(); ++i) {
      TableReader t(st[i], "styles[" + std::to_string(i) + "]");
      Style s;
      t.read("height", s.height);
      t.read_degrees("pitch_deg", s.pitch);
      t.read("label", s.label);
      t.read("thumbnail", s.thumbnail);
      if (s.thumbnail.empty()) s.thumbnail = "style" + std::to_string(i);
      t.finish();
      cfg.styles.push_back(std::move(s));
    }
  }
  {
    TableReader t(root.sub("sa"), "sa");
    t.read("alpha", cfg.sa.alpha);
    t.read("beta", cfg.sa.beta);
    t.read("gain", cfg.sa.gain);
    t.finish();
  }
  {
    TableReader t(root.sub("metrics"), "metrics");
    t.read("tolerance", cfg.metrics.tolerance);
    t.read("resolution", cfg.metrics.resolution);
    t.read("shift_max", cfg.metrics.shift_max);
    t.read("shift_step", cfg.metrics.shift_step);
    t.read_degrees("rotation_max_deg", cfg.metrics.rotation_max);
    t.read_degrees("rotation_step_deg", cfg.metrics.rotation_step);
    t.finish();
  }
  {
    TableReader t(root.sub("server"), "server");
    t.read("tick_hz", cfg.server.tick_hz);
    t.read("port", cfg.server.port);
    t.read("session_dir", cfg.server.session_dir);
    t.read("queue_capacity", cfg.server.queue_capacity);
    t.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  const json doc = toml::parse_file(path);
  try {
    return config_from_json(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline ExperimentConfig parse_config(const std::string& text, std::filesystem::path base_dir = ".") {
  return config_from_json(toml::parse(text), std::move(base_dir));
}

}  // namespace acord
