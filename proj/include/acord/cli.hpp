#pragma once

// Command implementations behind the `acord` executable. Each command takes
// parsed options and a stream for human-readable messages, writes its
// artifacts under the output directory and returns a process exit code.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "acord/baselines.hpp"
#include "acord/checkpoint.hpp"
#include "acord/config.hpp"
#include "acord/envs/tasks.hpp"
#include "acord/metrics.hpp"
#include "acord/sac.hpp"
#include "acord/server.hpp"
#include "acord/session.hpp"
#include "acord/trainer.hpp"

namespace acord::cli {

struct Options {
  std::filesystem::path config;
  std::filesystem::path checkpoint;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir;  // empty: the config's out_dir
  std::string condition = "acord";
  std::string shape = "heart";
  std::filesystem::path schedule;
  std::string grid = "5x3";
  std::optional<std::size_t> episodes;
  std::optional<unsigned short> port;
  std::optional<std::size_t> steps;       // train: overrides acord.total_steps
  std::optional<std::size_t> feature;     // sweep: which k axis to sweep
  std::vector<double> k;                  // eval: fixed k instead of random resampling
  std::vector<std::filesystem::path> sessions;  // score inputs
};

inline ExperimentConfig load_experiment(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) cfg.acord.seed = *o.seed;
  if (o.steps) cfg.acord.total_steps = *o.steps;
  cfg.validate();
  return cfg;
}

inline std::filesystem::path output_dir(const Options& o, const ExperimentConfig& cfg) {
  const std::filesystem::path dir = o.out_dir.empty() ? std::filesystem::path(cfg.out_dir) : o.out_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fa::fnv1a(ss.str());
}

inline CruiseTask make_cruise(const ExperimentConfig& cfg) { return CruiseTask(cfg.cruise, cfg.cruise_options); }

inline PainterTask make_painter(const ExperimentConfig& cfg) {
  return PainterTask(cfg.load_shapes(), cfg.painter, cfg.painter_options);
}

inline std::size_t action_size(const ExperimentConfig& cfg) { return cfg.environment == EnvKind::cruise ? 2 : 4; }

/// Loads a checkpoint and refuses it when it was trained under another config.
inline Checkpoint load_matching_checkpoint(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.config_hash != cfg.hash()) {
    throw ConfigError("checkpoint " + path.string() + " was written for config " + hex64(ck.config_hash) +
                      ", current config is " + hex64(cfg.hash()));
  }
  return ck;
}

inline std::shared_ptr<sac::ActorPolicy<float>> load_actor(const Checkpoint& ck, const ExperimentConfig& cfg) {
  const auto obs = cfg.observation_size() + cfg.features.size();
  auto actor = std::make_shared<sac::ActorPolicy<float>>(
      fa::Mlp<float>(sac::ActorPolicy<float>::make_spec(obs, action_size(cfg), cfg.sac.hidden)), action_size(cfg));
  ck.load_into("sac.actor", actor->net());
  return actor;
}

inline std::string k_text(const BehaviorOversightVector& k) {
  std::ostringstream os;
  os << std::setprecision(6);
  for (std::size_t j = 0; j < k.size(); ++j) os << (j ? " " : "") << k[j];
  return os.str();
}

// ---------------------------------------------------------------------------
// train

inline void write_episodes_csv(std::ostream& out, const std::string& hash, const std::vector<EpisodeRecord>& eps) {
  out << "config_hash,episode,start_step,length,return,env_return,failed,succeeded,mean_diversity,k_schedule\n";
  out << std::setprecision(10);
  for (const auto& e : eps) {
    std::string sched;
    for (const auto& [step, k] : e.k_schedule) sched += (sched.empty() ? "" : ";") + std::to_string(step) + ":" + k_text(k);
    out << hash << ',' << e.index << ',' << e.start_step << ',' << e.length << ',' << e.acord_return << ','
        << e.env_return << ',' << e.failed << ',' << e.succeeded << ',' << e.mean_diversity << ",\"" << sched << "\"\n";
  }
}

inline void write_updates_csv(std::ostream& out, const std::string& hash, const std::vector<UpdateRecord>& ups) {
  out << "config_hash,step,critic1,critic2,actor,temperature_loss,alpha,mean_q,discriminator_losses\n";
  out << std::setprecision(10);
  for (const auto& u : ups) {
    std::string d;
    for (double l : u.discriminator_losses) d += (d.empty() ? "" : ";") + std::to_string(l);
    out << hash << ',' << u.step << ',' << u.learner.critic1 << ',' << u.learner.critic2 << ',' << u.learner.actor
        << ',' << u.learner.temperature_loss << ',' << u.learner.alpha << ',' << u.learner.mean_q << ",\"" << d
        << "\"\n";
  }
}

template <typename Task>
int train_task(Task task, const ExperimentConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  const auto hash = cfg.hash();
  AcordTrainer<Task> trainer(std::move(task), cfg.features, cfg.acord, cfg.sac, cfg.discriminator);
  const auto latest = dir / "checkpoint.bin";
  std::size_t remaining = cfg.acord.total_steps;
  if (std::filesystem::exists(latest)) {
    const Checkpoint ck = load_matching_checkpoint(latest, cfg);
    trainer.restore(ck);
    remaining = ck.step >= remaining ? 0 : remaining - static_cast<std::size_t>(ck.step);
    log << "resuming from " << latest.string() << " at step " << ck.step << "\n";
  }
  auto sink = [&](const Checkpoint& c, std::string_view tag) {
    Checkpoint stamped = c;
    stamped.config_hash = hash;
    if (tag == "initial") {
      if (!std::filesystem::exists(latest)) stamped.save(dir / "checkpoint_initial.bin");
      return;
    }
    stamped.save(tag == "diverged" ? dir / "checkpoint_diverged.bin" : latest);
  };
  TrainReport report;
  try {
    report = trainer.train(remaining, sink);
  } catch (const TrainingDiverged& e) {
    log << "training diverged: " << e.what() << " (diagnostic checkpoint written)\n";
    return 3;
  }
  const std::string h = hex64(hash);
  {
    std::ofstream out(dir / "episodes.csv");
    write_episodes_csv(out, h, report.episodes);
  }
  {
    std::ofstream out(dir / "updates.csv");
    write_updates_csv(out, h, report.updates);
  }
  std::size_t failures = 0;
  for (const auto& e : report.episodes) failures += e.failed ? 1 : 0;
  json summary{{"config_hash", h},
               {"steps", trainer.global_step()},
               {"episodes", report.episodes.size()},
               {"failures", failures},
               {"learner_transitions", report.learner_transitions},
               {"discriminator_transitions", report.discriminator_transitions},
               {"config", cfg.effective()}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  log << "trained " << report.steps << " steps, " << report.episodes.size() << " episodes, " << failures
      << " failures; config " << h << "\n";
  return 0;
}

inline int cmd_train(const Options& o, std::ostream& log) {
  const ExperimentConfig cfg = load_experiment(o);
  const auto dir = output_dir(o, cfg);
  if (cfg.environment == EnvKind::cruise) return train_task(make_cruise(cfg), cfg, dir, log);
  return train_task(make_painter(cfg), cfg, dir, log);
}

// ---------------------------------------------------------------------------
// eval

template <typename Task>
int eval_task(Task task, const ExperimentConfig& cfg, const Options& o, const std::filesystem::path& dir,
              std::ostream& log) {
  const Checkpoint ck = load_matching_checkpoint(o.checkpoint, cfg);
  const auto actor = load_actor(ck, cfg);
  const std::size_t episodes = o.episodes.value_or(100);
  const KSchedule schedule = o.k.empty()
                                 ? KSchedule::random(cfg.acord.effective_resample_interval(cfg.episode_cap()))
                                 : KSchedule::fixed(BehaviorOversightVector::clamped(o.k));
  if (!o.k.empty() && o.k.size() != cfg.features.size()) throw ConfigError("--k needs one value per feature");
  const auto s = evaluate_policy(task, *actor, cfg.features, schedule, episodes, cfg.acord.seed);
  const std::string h = hex64(cfg.hash());
  std::ofstream out(dir / "eval.csv");
  out << "config_hash,episode,length,return";
  for (const auto& n : cfg.features.names) out << ",mean_" << n;
  out << '\n' << std::setprecision(10);
  for (std::size_t e = 0; e < s.episodes; ++e) {
    out << h << ',' << e << ',' << s.lengths[e] << ',' << s.returns[e];
    for (double f : s.mean_features[e]) out << ',' << f;
    out << '\n';
  }
  std::ofstream bins(dir / "eval_bins.csv");
  bins << "config_hash,feature,k_low,k_high,count,mean_feature\n" << std::setprecision(10);
  for (std::size_t j = 0; j < s.feature_bins.size(); ++j) {
    for (const auto& b : s.feature_bins[j]) {
      bins << h << ',' << cfg.features.names[j] << ',' << b.k_low << ',' << b.k_high << ',' << b.count << ','
           << b.mean_feature << '\n';
    }
  }
  log << "episodes " << s.episodes << " failure_rate " << s.failure_rate << " success_rate " << s.success_rate
      << "\n";
  return 0;
}

inline int cmd_eval(const Options& o, std::ostream& log) {
  const ExperimentConfig cfg = load_experiment(o);
  const auto dir = output_dir(o, cfg);
  if (cfg.environment == EnvKind::cruise) return eval_task(make_cruise(cfg), cfg, o, dir, log);
  return eval_task(make_painter(cfg), cfg, o, dir, log);
}

// ---------------------------------------------------------------------------
// sweep

/// "5x3" -> (5, 3): points along the swept axis and along the other axes.
inline std::pair<std::size_t, std::size_t> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    const auto a = std::stoul(text.substr(0, x));
    const auto b = std::stoul(text.substr(x + 1));
    if (a < 1 || b < 1) throw std::invalid_argument(text);
    return {a, b};
  } catch (const std::exception&) {
    throw ConfigError("--grid expects AxB with positive counts, got '" + text + "'");
  }
}

inline std::vector<double> unit_grid(std::size_t n) {
  if (n == 1) return {0.5};
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<double>(i) / static_cast<double>(n - 1));
  return out;
}

inline void write_sweep_csv(std::ostream& out, const std::string& hash, const ManifoldReport& r) {
  out << "config_hash,feature,k_feature,k_cross,episodes,mean,min,max,failure_rate\n" << std::setprecision(10);
  for (const auto& c : r.cells) {
    out << hash << ',' << r.feature_name << ',' << c.k_feature << ',' << c.k_cross << ',' << c.episodes << ','
        << c.mean << ',' << c.min << ',' << c.max << ',' << c.failure_rate << '\n';
  }
}

template <typename Task>
int sweep_task(Task task, const ExperimentConfig& cfg, const Options& o, const std::filesystem::path& dir,
               std::ostream& log) {
  const Checkpoint ck = load_matching_checkpoint(o.checkpoint, cfg);
  const auto actor = load_actor(ck, cfg);
  const auto [nk, nc] = parse_grid(o.grid);
  const auto report = manifold_sweep(task, *actor, cfg.features, o.feature.value_or(0), unit_grid(nk), unit_grid(nc),
                                     o.episodes.value_or(3), cfg.acord.seed);
  std::ofstream out(dir / "sweep.csv");
  write_sweep_csv(out, hex64(cfg.hash()), report);
  for (std::size_t c = 0; c < report.cross_grid.size(); ++c) {
    log << "cross " << report.cross_grid[c] << ": spearman " << spearman(report.k_grid, report.row_means(c)) << "\n";
  }
  return 0;
}

inline int cmd_sweep(const Options& o, std::ostream& log) {
  const ExperimentConfig cfg = load_experiment(o);
  const auto dir = output_dir(o, cfg);
  if (cfg.environment == EnvKind::cruise) return sweep_task(make_cruise(cfg), cfg, o, dir, log);
  return sweep_task(make_painter(cfg), cfg, o, dir, log);
}

// ---------------------------------------------------------------------------
// paint / score / serve

inline SessionSetup painter_setup(const ExperimentConfig& cfg, Condition condition, const Shape& shape) {
  SessionSetup s;
  s.condition = condition;
  s.shape = shape;
  s.painter = cfg.painter;
  s.styles = StyleLibrary(cfg.styles);
  s.sa = cfg.sa;
  s.metrics = cfg.metrics;
  s.features = cfg.features;
  s.tick_hz = cfg.server.tick_hz;
  s.seed = cfg.acord.seed;
  s.config_hash = cfg.hash();
  return s;
}

inline void require_painter(const ExperimentConfig& cfg) {
  if (cfg.environment != EnvKind::painter) throw ConfigError("this command needs a painter config");
}

inline void write_scores_csv(std::ostream& out, const std::vector<SessionRecord>& records) {
  out << "config_hash,session,condition,shape,terminated,failed,coverage,consistency,dx,dy,dtheta\n"
      << std::setprecision(10);
  for (const auto& r : records) {
    const auto& s = r.scores.value();
    out << hex64(r.config_hash) << ',' << r.id << ',' << to_string(r.condition) << ',' << r.shape.name << ','
        << r.terminated << ',' << r.failed << ',' << s.coverage << ',' << s.consistency << ',' << s.best_shift.dx
        << ',' << s.best_shift.dy << ',' << s.best_shift.dtheta << '\n';
  }
}

inline int cmd_paint(const Options& o, std::ostream& log) {
  const ExperimentConfig cfg = load_experiment(o);
  require_painter(cfg);
  const auto dir = output_dir(o, cfg);
  const Condition condition = parse_condition(o.condition);
  SessionSetup setup = painter_setup(cfg, condition, load_named_shape(cfg.resolve(cfg.shapes_dir), o.shape));
  if (condition == Condition::acord) {
    if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required for the acord condition");
    setup.actor = load_actor(load_matching_checkpoint(o.checkpoint, cfg), cfg);
    setup.checkpoint_hash = file_hash(o.checkpoint);
  }
  std::vector<ScheduledMessage> schedule;
  if (!o.schedule.empty()) schedule = load_schedule(o.schedule);
  check_schedule(schedule, condition, setup.features.size(), setup.styles.size());

  // Controls due at tick 0 become the initial control so the record starts from them.
  ControlValue initial = PaintSession::default_control(setup);
  std::size_t first = 0;
  for (; first < schedule.size() && schedule[first].tick == 0 &&
         !std::holds_alternative<FinishMessage>(schedule[first].message);
       ++first) {
    initial = control_from_message(schedule[first].message, initial, setup.features.size(), setup.styles.size());
  }
  schedule.erase(schedule.begin(), schedule.begin() + static_cast<std::ptrdiff_t>(first));

  PaintSession session(setup, initial);
  run_scripted(session, schedule);
  const std::string id = "paint_" + o.condition + "_" + o.shape;
  const SessionRecord record = finish_session(session, id, dir);
  std::ofstream out(dir / (id + "_scores.csv"));
  write_scores_csv(out, {record});
  log << id << ": ticks " << record.ticks.size() << " terminated " << record.terminated << " failed "
      << record.failed << " coverage " << record.scores->coverage << " consistency " << record.scores->consistency
      << "\n";
  return 0;
}

/// Re-scores stored sessions from their raster files.
inline std::vector<SessionRecord> score_sessions(const std::vector<std::filesystem::path>& paths,
                                                 const MetricsConfig& metrics) {
  std::vector<SessionRecord> out;
  for (const auto& p : paths) {
    SessionRecord r = load_record(p);
    const StrokeRaster raster = read_pgm(p.parent_path() / r.raster_file);
    r.scores = score_raster(raster, r.shape, metrics);
    out.push_back(std::move(r));
  }
  return out;
}

inline int cmd_score(const Options& o, std::ostream& log) {
  if (o.sessions.empty()) throw ConfigError("score needs at least one session record");
  MetricsConfig metrics;
  std::filesystem::path dir = o.out_dir;
  if (!o.config.empty()) {
    const ExperimentConfig cfg = load_experiment(o);
    metrics = cfg.metrics;
    if (dir.empty()) dir = cfg.out_dir;
  }
  if (dir.empty()) dir = ".";
  std::filesystem::create_directories(dir);
  const auto records = score_sessions(o.sessions, metrics);
  std::ofstream out(dir / "scores.csv");
  write_scores_csv(out, records);
  log << "scored " << records.size() << " session(s) into " << (dir / "scores.csv").string() << "\n";
  return 0;
}

inline ServerContext server_context(const ExperimentConfig& cfg, const Options& o) {
  ServerContext ctx;
  for (const auto& s : cfg.load_shapes()) ctx.shapes.emplace(s.name, s);
  ctx.painter = cfg.painter;
  ctx.styles = StyleLibrary(cfg.styles);
  ctx.sa = cfg.sa;
  ctx.metrics = cfg.metrics;
  ctx.features = cfg.features;
  ctx.tick_hz = cfg.server.tick_hz;
  ctx.queue_capacity = cfg.server.queue_capacity;
  ctx.session_dir = o.out_dir.empty() ? std::filesystem::path(cfg.server.session_dir) : o.out_dir;
  ctx.seed = cfg.acord.seed;
  ctx.config_hash = cfg.hash();
  if (!o.checkpoint.empty()) {
    ctx.actor = load_actor(load_matching_checkpoint(o.checkpoint, cfg), cfg);
    ctx.checkpoint_hash = file_hash(o.checkpoint);
  }
  return ctx;
}

inline int cmd_serve(const Options& o, std::ostream& log) {
  const ExperimentConfig cfg = load_experiment(o);
  require_painter(cfg);
  RolloutServer server(server_context(cfg, o), o.port.value_or(static_cast<unsigned short>(cfg.server.port)));
  log << "serving on 127.0.0.1:" << server.port() << (o.checkpoint.empty() ? " (no policy: acord disabled)" : "")
      << "\n"
      << std::flush;
  server.run();
  return 0;
}

}  // namespace acord::cli
