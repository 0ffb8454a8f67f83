#pragma once

// Painting sessions under the three study conditions. The tick core is
// transport-free so scripted schedules and the live server share it.

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "acord/baselines.hpp"
#include "acord/envs/painter.hpp"
#include "acord/envs/shape.hpp"
#include "acord/envs/stroke.hpp"
#include "acord/error.hpp"
#include "acord/kspace.hpp"
#include "acord/metrics.hpp"
#include "acord/sac.hpp"

namespace acord {

using json = nlohmann::json;

enum class Condition { acord, styles, sa };

inline std::string to_string(Condition c) {
  switch (c) {
    case Condition::acord: return "acord";
    case Condition::styles: return "styles";
    case Condition::sa: return "sa";
  }
  return "?";
}

inline Condition parse_condition(const std::string& s) {
  if (s == "acord") return Condition::acord;
  if (s == "styles") return Condition::styles;
  if (s == "sa") return Condition::sa;
  throw RequestError("unknown condition '" + s + "' (expected acord, styles or sa)");
}

/// The one live input a condition listens to.
struct ControlValue {
  Condition condition = Condition::acord;
  BehaviorOversightVector k;  // acord
  UserCommand u{0.0, 0.0};    // sa
  std::size_t style = 0;      // styles

  bool operator==(const ControlValue&) const = default;
};

/// Single-slot mailbox between the message receiver and the stepping loop.
/// Writers publish a whole new value; readers always see a complete one.
class ControlCell {
 public:
  explicit ControlCell(ControlValue initial = {}) : value_(std::make_shared<const ControlValue>(std::move(initial))) {}

  void store(ControlValue v) {
    auto next = std::make_shared<const ControlValue>(std::move(v));
    std::lock_guard lock(mu_);
    value_.swap(next);
    ++version_;
  }

  std::shared_ptr<const ControlValue> load() const {
    std::lock_guard lock(mu_);
    return value_;
  }

  std::uint64_t version() const {
    std::lock_guard lock(mu_);
    return version_;
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const ControlValue> value_;
  std::uint64_t version_ = 0;
};

// ---------------------------------------------------------------------------
// Wire messages

struct StartMessage {
  Condition condition = Condition::acord;
  std::string shape;
  std::optional<std::vector<double>> k;
  std::optional<long long> style;
};
struct SetKMessage {
  std::vector<double> k;
};
struct JoystickMessage {
  UserCommand u{0.0, 0.0};
};
struct SelectStyleMessage {
  long long index = 0;
};
struct FinishMessage {};

using WireMessage = std::variant<StartMessage, SetKMessage, JoystickMessage, SelectStyleMessage, FinishMessage>;

inline std::vector<double> number_list(const json& j, const char* field) {
  if (!j.is_array()) throw RequestError(std::string("'") + field + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw RequestError(std::string("'") + field + "' must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline WireMessage parse_message(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw RequestError("message needs a string 'type'");
  }
  const auto type = j["type"].get<std::string>();
  if (type == "start") {
    StartMessage m;
    if (!j.contains("condition") || !j["condition"].is_string()) throw RequestError("start needs 'condition'");
    if (!j.contains("shape") || !j["shape"].is_string()) throw RequestError("start needs 'shape'");
    m.condition = parse_condition(j["condition"].get<std::string>());
    m.shape = j["shape"].get<std::string>();
    if (j.contains("k")) m.k = number_list(j["k"], "k");
    for (const char* key : {"style", "index"}) {
      if (j.contains(key)) {
        if (!j[key].is_number_integer()) throw RequestError("style index must be an integer");
        m.style = j[key].get<long long>();
      }
    }
    return m;
  }
  if (type == "set_k") {
    if (!j.contains("k")) throw RequestError("set_k needs 'k'");
    return SetKMessage{number_list(j["k"], "k")};
  }
  if (type == "joystick") {
    if (!j.contains("u")) throw RequestError("joystick needs 'u'");
    const auto u = number_list(j["u"], "u");
    if (u.size() != 2) throw RequestError("joystick 'u' must have 2 components");
    return JoystickMessage{{u[0], u[1]}};
  }
  if (type == "select_style") {
    if (!j.contains("index") || !j["index"].is_number_integer()) throw RequestError("select_style needs integer 'index'");
    return SelectStyleMessage{j["index"].get<long long>()};
  }
  if (type == "finish") return FinishMessage{};
  throw RequestError("unknown message type '" + type + "'");
}

inline WireMessage parse_message(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw RequestError(std::string("malformed message: ") + e.what());
  }
  return parse_message(j);
}

inline json to_json(const WireMessage& m) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StartMessage>) {
          json j{{"type", "start"}, {"condition", to_string(v.condition)}, {"shape", v.shape}};
          if (v.k) j["k"] = *v.k;
          if (v.style) j["style"] = *v.style;
          return j;
        } else if constexpr (std::is_same_v<T, SetKMessage>) {
          return {{"type", "set_k"}, {"k", v.k}};
        } else if constexpr (std::is_same_v<T, JoystickMessage>) {
          return {{"type", "joystick"}, {"u", {v.u[0], v.u[1]}}};
        } else if constexpr (std::is_same_v<T, SelectStyleMessage>) {
          return {{"type", "select_style"}, {"index", v.index}};
        } else {
          return {{"type", "finish"}};
        }
      },
      m);
}

inline std::string message_type(const WireMessage& m) { return to_json(m)["type"].get<std::string>(); }

/// Checks a control message against the running condition and returns the
/// clamped value it would install.
inline ControlValue control_from_message(const WireMessage& m, const ControlValue& current, std::size_t k_size,
                                         std::size_t style_count) {
  ControlValue next = current;
  auto mismatch = [&](const char* type) {
    return RequestError(std::string(type) + " is not accepted during a " + to_string(current.condition) + " episode");
  };
  if (const auto* s = std::get_if<SetKMessage>(&m)) {
    if (current.condition != Condition::acord) throw mismatch("set_k");
    if (s->k.size() != k_size) {
      throw RequestError("set_k expects " + std::to_string(k_size) + " values, got " + std::to_string(s->k.size()));
    }
    next.k = BehaviorOversightVector::clamped(s->k);
  } else if (const auto* js = std::get_if<JoystickMessage>(&m)) {
    if (current.condition != Condition::sa) throw mismatch("joystick");
    next.u = clip_command(js->u);
  } else if (const auto* st = std::get_if<SelectStyleMessage>(&m)) {
    if (current.condition != Condition::styles) throw mismatch("select_style");
    if (st->index < 0 || static_cast<std::size_t>(st->index) >= style_count) {
      throw RequestError("style index " + std::to_string(st->index) + " out of range (library has " +
                         std::to_string(style_count) + ")");
    }
    next.style = static_cast<std::size_t>(st->index);
  } else {
    throw RequestError(message_type(m) + " is not a control message");
  }
  return next;
}

// ---------------------------------------------------------------------------
// Session core

struct SessionSetup {
  Condition condition = Condition::acord;
  Shape shape;
  PainterParams painter;
  StyleLibrary styles;
  SAParams sa;
  MetricsConfig metrics;
  FeatureMap features = make_feature_map({kPainterHeight, kPainterPitch}, {"height", "pitch"});
  std::shared_ptr<const sac::ActorPolicy<float>> actor;  // required for acord
  double tick_hz = 20.0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t checkpoint_hash = 0;
};

struct TickRecord {
  std::size_t t = 0;
  double time = 0.0;  // seconds since start at the nominal tick rate
  ControlValue control;
  PainterAction action;
  PainterState state;  // after the step
  std::vector<double> belief;
  bool terminated = false;
  bool failed = false;
};

class PaintSession {
 public:
  explicit PaintSession(SessionSetup setup, std::optional<ControlValue> initial = std::nullopt)
      : setup_(std::move(setup)),
        cell_(initial ? *initial : default_control(setup_)),
        belief_(setup_.styles.size()) {
    setup_.shape.validate(setup_.painter.x_min, setup_.painter.x_max, setup_.painter.y_min, setup_.painter.y_max);
    if (setup_.condition == Condition::acord) {
      if (!setup_.actor) throw RequestError("acord condition needs a trained policy checkpoint");
      const auto need = kPainterObservationSize + setup_.features.size();
      if (static_cast<std::size_t>(setup_.actor->net().spec().input_size()) != need) {
        throw ConfigError("policy input size does not match painter observation plus k");
      }
    }
    const auto c = cell_.load();
    if (c->condition != setup_.condition) throw RequestError("initial control does not match the condition");
    if (setup_.condition == Condition::acord && c->k.size() != setup_.features.size()) {
      throw RequestError("initial k has the wrong size");
    }
    if (setup_.condition == Condition::styles) setup_.styles.at(c->style);
    state_ = painter_reset(setup_.shape, setup_.painter);
    initial_state_ = state_;
    initial_control_ = *c;
  }

  static ControlValue default_control(const SessionSetup& s) {
    ControlValue v;
    v.condition = s.condition;
    if (s.condition == Condition::acord) v.k = BehaviorOversightVector(std::vector<double>(s.features.size(), 0.5));
    return v;
  }

  const SessionSetup& setup() const { return setup_; }
  ControlCell& cell() { return cell_; }

  /// Validates, clamps and publishes a control message. Takes effect on the
  /// next tick. Safe to call from any thread.
  ControlValue apply(const WireMessage& m) {
    std::lock_guard lock(apply_mu_);
    auto next = control_from_message(m, *cell_.load(), setup_.features.size(), setup_.styles.size());
    cell_.store(next);
    return next;
  }

  bool done() const { return terminated_ || ticks_.size() >= setup_.painter.step_cap; }
  bool terminated() const { return terminated_; }
  bool failed() const { return failed_; }
  const PainterState& state() const { return state_; }
  const PainterState& initial_state() const { return initial_state_; }
  const ControlValue& initial_control() const { return initial_control_; }
  const std::vector<TickRecord>& ticks() const { return ticks_; }
  const SABelief& belief() const { return belief_; }

  /// One environment step with the control value current at tick start.
  const TickRecord& tick() {
    if (done()) throw RequestError("episode already finished");
    const auto control = cell_.load();
    TickRecord rec;
    rec.t = ticks_.size();
    rec.time = static_cast<double>(rec.t) / setup_.tick_hz;
    rec.control = *control;
    rec.action = action_for(*control);
    const auto r = painter_step(state_, rec.action, setup_.shape, setup_.painter);
    state_ = r.next_state;
    terminated_ = r.terminated;
    failed_ = r.failed;
    rec.state = state_;
    rec.terminated = r.terminated;
    rec.failed = r.failed;
    if (setup_.condition == Condition::sa) rec.belief = belief_.probabilities();
    ticks_.push_back(std::move(rec));
    return ticks_.back();
  }

  std::vector<PainterState> trajectory() const {
    std::vector<PainterState> out{initial_state_};
    for (const auto& t : ticks_) out.push_back(t.state);
    return out;
  }

 private:
  PainterAction action_for(const ControlValue& c) {
    const auto& p = setup_.painter;
    switch (setup_.condition) {
      case Condition::acord: {
        const auto obs = painter_observation(state_, setup_.shape, p);
        const Eigen::VectorXd s = augment_state(obs, c.k, setup_.features).flatten();
        const Eigen::VectorXd a = setup_.actor->act_deterministic(s);
        return PainterAction::from_normalized(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())), p);
      }
      case Condition::styles:
        return fixed_style_policy(setup_.styles.at(c.style), state_, setup_.shape, p);
      case Condition::sa: {
        belief_ = sa_update_belief(belief_, c.u, state_, setup_.styles, p, setup_.sa);
        const UserCommand assist = sa_assist(belief_, state_, setup_.styles, p, setup_.sa);
        return sa_action(sa_blend(c.u, assist, setup_.sa.alpha), state_, setup_.shape, p);
      }
    }
    return {};
  }

  SessionSetup setup_;
  ControlCell cell_;
  std::mutex apply_mu_;
  SABelief belief_;
  PainterState state_;
  PainterState initial_state_;
  ControlValue initial_control_;
  std::vector<TickRecord> ticks_;
  bool terminated_ = false;
  bool failed_ = false;
};

// ---------------------------------------------------------------------------
// Scripted control schedules: JSON lines, each a wire message plus "tick".

struct ScheduledMessage {
  std::size_t tick = 0;
  WireMessage message;
};

inline std::vector<ScheduledMessage> parse_schedule(std::istream& in) {
  std::vector<ScheduledMessage> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      const json j = json::parse(line);
      if (!j.contains("tick") || !j["tick"].is_number_unsigned()) throw RequestError("needs a non-negative 'tick'");
      ScheduledMessage m{j["tick"].get<std::size_t>(), parse_message(j)};
      if (std::holds_alternative<StartMessage>(m.message)) throw RequestError("start does not belong in a schedule");
      if (!out.empty() && m.tick < out.back().tick) throw RequestError("ticks must be non-decreasing");
      out.push_back(std::move(m));
    } catch (const json::parse_error& e) {
      throw ConfigError("schedule line " + std::to_string(lineno) + ": " + e.what());
    } catch (const RequestError& e) {
      throw ConfigError("schedule line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<ScheduledMessage> load_schedule(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schedule " + path.string());
  return parse_schedule(in);
}

/// Every control message must suit the condition.
inline void check_schedule(const std::vector<ScheduledMessage>& schedule, Condition condition, std::size_t k_size,
                           std::size_t style_count) {
  ControlValue probe;
  probe.condition = condition;
  probe.k = BehaviorOversightVector(std::vector<double>(k_size, 0.5));
  for (const auto& m : schedule) {
    if (std::holds_alternative<FinishMessage>(m.message)) continue;
    try {
      probe = control_from_message(m.message, probe, k_size, style_count);
    } catch (const RequestError& e) {
      throw ConfigError("schedule at tick " + std::to_string(m.tick) + ": " + e.what());
    }
  }
}

/// Runs until the episode ends, the cap fires or a finish message is due.
inline void run_scripted(PaintSession& session, const std::vector<ScheduledMessage>& schedule) {
  std::size_t next = 0;
  while (!session.done()) {
    const std::size_t t = session.ticks().size();
    bool finish = false;
    for (; next < schedule.size() && schedule[next].tick <= t; ++next) {
      if (std::holds_alternative<FinishMessage>(schedule[next].message)) {
        finish = true;
        break;
      }
      session.apply(schedule[next].message);
    }
    if (finish) break;
    session.tick();
  }
}

// ---------------------------------------------------------------------------
// Records

inline constexpr int kSessionSchemaVersion = 1;

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

inline std::uint64_t parse_hex64(const std::string& s) { return std::stoull(s, nullptr, 16); }

inline json state_to_json(const PainterState& s) {
  return {{"ee", {s.ee_position.x(), s.ee_position.y(), s.ee_position.z()}},
          {"ee_pitch", s.ee_pitch},
          {"ee_velocity", {s.ee_velocity.x(), s.ee_velocity.y(), s.ee_velocity.z()}},
          {"brush", {s.brush_position.x(), s.brush_position.y()}},
          {"brush_height", s.brush_height},
          {"brush_pitch", s.brush_pitch},
          {"waypoint", s.next_waypoint_index}};
}

inline PainterState state_from_json(const json& j) {
  PainterState s;
  const auto& e = j.at("ee");
  s.ee_position = {e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>()};
  s.ee_pitch = j.at("ee_pitch").get<double>();
  const auto& v = j.at("ee_velocity");
  s.ee_velocity = {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
  const auto& b = j.at("brush");
  s.brush_position = {b.at(0).get<double>(), b.at(1).get<double>()};
  s.brush_height = j.at("brush_height").get<double>();
  s.brush_pitch = j.at("brush_pitch").get<double>();
  s.next_waypoint_index = j.at("waypoint").get<std::size_t>();
  return s;
}

inline json control_to_json(const ControlValue& c) {
  switch (c.condition) {
    case Condition::acord: return {{"k", c.k.values()}};
    case Condition::sa: return {{"u", {c.u[0], c.u[1]}}};
    case Condition::styles: return {{"style", c.style}};
  }
  return {};
}

inline ControlValue control_from_json(const json& j, Condition condition) {
  ControlValue c;
  c.condition = condition;
  switch (condition) {
    case Condition::acord: c.k = BehaviorOversightVector(j.at("k").get<std::vector<double>>()); break;
    case Condition::sa: c.u = {j.at("u").at(0).get<double>(), j.at("u").at(1).get<double>()}; break;
    case Condition::styles: c.style = j.at("style").get<std::size_t>(); break;
  }
  return c;
}

struct SessionRecord {
  int schema_version = kSessionSchemaVersion;
  std::string id;
  Condition condition = Condition::acord;
  Shape shape;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t checkpoint_hash = 0;
  double tick_hz = 20.0;
  PainterState initial_state;
  ControlValue initial_control;
  std::vector<TickRecord> ticks;
  bool terminated = false;
  bool failed = false;
  std::string raster_file;
  std::optional<CoverageReport> scores;

  /// k (or u, or style) in force at each tick.
  std::vector<ControlValue> control_history() const {
    std::vector<ControlValue> out;
    for (const auto& t : ticks) out.push_back(t.control);
    return out;
  }
};

inline json to_json(const SessionRecord& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["id"] = r.id;
  j["condition"] = to_string(r.condition);
  json wp = json::array();
  for (const auto& p : r.shape.waypoints) wp.push_back({p.x(), p.y()});
  j["shape"] = {{"name", r.shape.name}, {"waypoints", wp}};
  j["seed"] = r.seed;
  j["config_hash"] = hex64(r.config_hash);
  j["checkpoint_hash"] = hex64(r.checkpoint_hash);
  j["tick_hz"] = r.tick_hz;
  j["initial_state"] = state_to_json(r.initial_state);
  j["initial_control"] = control_to_json(r.initial_control);
  json ticks = json::array();
  for (const auto& t : r.ticks) {
    json tj{{"t", t.t},
            {"time", t.time},
            {"control", control_to_json(t.control)},
            {"action", {t.action.vx, t.action.vy, t.action.vz, t.action.v_pitch}},
            {"state", state_to_json(t.state)},
            {"terminated", t.terminated},
            {"failed", t.failed}};
    if (!t.belief.empty()) tj["belief"] = t.belief;
    ticks.push_back(std::move(tj));
  }
  j["ticks"] = std::move(ticks);
  j["terminated"] = r.terminated;
  j["failed"] = r.failed;
  j["raster"] = r.raster_file;
  if (r.scores) {
    j["scores"] = {{"coverage", r.scores->coverage},
                   {"consistency", r.scores->consistency},
                   {"best_shift", {r.scores->best_shift.dx, r.scores->best_shift.dy, r.scores->best_shift.dtheta}}};
  }
  return j;
}

inline SessionRecord record_from_json(const json& j) {
  SessionRecord r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kSessionSchemaVersion) {
      throw ConfigError("unsupported session schema version " + std::to_string(r.schema_version));
    }
    r.id = j.at("id").get<std::string>();
    r.condition = parse_condition(j.at("condition").get<std::string>());
    r.shape.name = j.at("shape").at("name").get<std::string>();
    for (const auto& p : j.at("shape").at("waypoints")) r.shape.waypoints.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = parse_hex64(j.at("config_hash").get<std::string>());
    r.checkpoint_hash = parse_hex64(j.at("checkpoint_hash").get<std::string>());
    r.tick_hz = j.at("tick_hz").get<double>();
    r.initial_state = state_from_json(j.at("initial_state"));
    r.initial_control = control_from_json(j.at("initial_control"), r.condition);
    double last_time = -1.0;
    for (const auto& tj : j.at("ticks")) {
      TickRecord t;
      t.t = tj.at("t").get<std::size_t>();
      t.time = tj.at("time").get<double>();
      if (!(t.time > last_time)) throw ConfigError("session timestamps must be strictly increasing");
      last_time = t.time;
      t.control = control_from_json(tj.at("control"), r.condition);
      const auto& a = tj.at("action");
      t.action = {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>(), a.at(3).get<double>()};
      t.state = state_from_json(tj.at("state"));
      t.terminated = tj.at("terminated").get<bool>();
      t.failed = tj.at("failed").get<bool>();
      if (tj.contains("belief")) t.belief = tj["belief"].get<std::vector<double>>();
      r.ticks.push_back(std::move(t));
    }
    r.terminated = j.at("terminated").get<bool>();
    r.failed = j.at("failed").get<bool>();
    r.raster_file = j.at("raster").get<std::string>();
    if (j.contains("scores")) {
      const auto& s = j["scores"];
      CoverageReport c;
      c.coverage = s.at("coverage").get<double>();
      c.consistency = s.at("consistency").get<double>();
      const auto& b = s.at("best_shift");
      c.best_shift = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>()};
      r.scores = c;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed session record: ") + e.what());
  } catch (const RequestError& e) {
    throw ConfigError(std::string("malformed session record: ") + e.what());
  }
  return r;
}

inline SessionRecord make_record(const PaintSession& session, std::string id) {
  const auto& s = session.setup();
  SessionRecord r;
  r.id = std::move(id);
  r.condition = s.condition;
  r.shape = s.shape;
  r.seed = s.seed;
  r.config_hash = s.config_hash;
  r.checkpoint_hash = s.checkpoint_hash;
  r.tick_hz = s.tick_hz;
  r.initial_state = session.initial_state();
  r.initial_control = session.initial_control();
  r.ticks = session.ticks();
  r.terminated = session.terminated();
  r.failed = session.failed();
  return r;
}

inline StrokeRaster render_record(const SessionRecord& r, const PainterParams& p, int resolution) {
  std::vector<PainterState> traj{r.initial_state};
  for (const auto& t : r.ticks) traj.push_back(t.state);
  return render_stroke(traj, p, resolution);
}

template <typename F>
void with_one_retry(F&& f) {
  try {
    f();
  } catch (const std::exception&) {
    f();
  }
}

/// Writes <dir>/<id>.json and <dir>/<id>.pgm; each write is retried once.
inline std::filesystem::path save_record(const std::filesystem::path& dir, SessionRecord& record,
                                         const StrokeRaster& raster) {
  std::filesystem::create_directories(dir);
  record.raster_file = record.id + ".pgm";
  const auto pgm = dir / record.raster_file;
  with_one_retry([&] { write_pgm(pgm, raster); });
  const auto path = dir / (record.id + ".json");
  with_one_retry([&] {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
      out << to_json(record).dump(1) << '\n';
      if (!out) throw std::runtime_error("short write on " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  });
  return path;
}

inline SessionRecord load_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open session record " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return record_from_json(j);
}

/// Renders, scores and persists a finished session.
inline SessionRecord finish_session(const PaintSession& session, const std::string& id,
                                    const std::filesystem::path& store) {
  SessionRecord record = make_record(session, id);
  const auto& s = session.setup();
  const StrokeRaster raster = render_record(record, s.painter, s.metrics.resolution);
  record.scores = score_raster(raster, s.shape, s.metrics);
  save_record(store, record, raster);
  return record;
}

struct ReplayResult {
  bool identical = false;
  std::size_t ticks = 0;
  std::optional<std::size_t> first_mismatch;
};

/// Feeds the recorded control stream back through a fresh session and
/// compares every action and state exactly.
inline ReplayResult replay(const SessionRecord& record, SessionSetup setup) {
  setup.condition = record.condition;
  setup.shape = record.shape;
  PaintSession session(std::move(setup), record.initial_control);
  ReplayResult result;
  if (!(session.initial_state() == record.initial_state)) {
    result.first_mismatch = 0;
    return result;
  }
  for (const auto& t : record.ticks) {
    if (session.done()) {
      result.first_mismatch = t.t;
      return result;
    }
    session.cell().store(t.control);
    const auto& out = session.tick();
    ++result.ticks;
    if (!(out.state == t.state) || !(out.action == t.action) || out.terminated != t.terminated ||
        out.failed != t.failed || out.belief != t.belief) {
      result.first_mismatch = t.t;
      return result;
    }
  }
  result.identical = session.terminated() == record.terminated && session.failed() == record.failed;
  return result;
}

}  // namespace acord
