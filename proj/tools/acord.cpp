#include <CLI11.hpp>

#include <iostream>

#include "acord/cli.hpp"

int main(int argc, char** argv) {
  using acord::cli::Options;
  CLI::App app{"acord: train, evaluate and steer behavior-conditioned policies"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub, bool needs_config = true) {
    auto* c = sub->add_option("--config", o.config, "experiment config (TOML)");
    if (needs_config) c->required();
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_option("--out-dir", o.out_dir, "output directory (default: config out_dir)");
  };

  auto* train = app.add_subcommand("train", "run the training loop; resumes from <out-dir>/checkpoint.bin");
  common(train);
  train->add_option("--steps", o.steps, "override acord.total_steps");

  auto* eval = app.add_subcommand("eval", "deterministic rollouts under random or fixed k");
  common(eval);
  eval->add_option("--checkpoint", o.checkpoint)->required();
  eval->add_option("--episodes", o.episodes, "episodes (default 100)");
  eval->add_option("--k", o.k, "fixed k, one value per feature")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "achieved feature over a k grid");
  common(sweep);
  sweep->add_option("--checkpoint", o.checkpoint)->required();
  sweep->add_option("--grid", o.grid, "swept points x cross points, e.g. 5x3");
  sweep->add_option("--episodes", o.episodes, "episodes per cell (default 3)");
  sweep->add_option("--feature", o.feature, "k axis to sweep (default 0)");

  auto* paint = app.add_subcommand("paint", "headless painting session from a control schedule");
  common(paint);
  paint->add_option("--checkpoint", o.checkpoint, "policy checkpoint (acord condition)");
  paint->add_option("--condition", o.condition, "acord | styles | sa")->check(CLI::IsMember({"acord", "styles", "sa"}));
  paint->add_option("--shape", o.shape, "shape name");
  paint->add_option("--schedule", o.schedule, "JSON-lines control schedule");

  auto* score = app.add_subcommand("score", "re-score stored session records");
  common(score, false);
  score->add_option("sessions", o.sessions, "session record files")->required();

  auto* serve = app.add_subcommand("serve", "live rollout service (WebSocket + HTTP)");
  common(serve);
  serve->add_option("--checkpoint", o.checkpoint, "policy checkpoint (enables acord)");
  serve->add_option("--port", o.port, "listen port (default: config server.port)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return acord::cli::cmd_train(o, std::cout);
    if (*eval) return acord::cli::cmd_eval(o, std::cout);
    if (*sweep) return acord::cli::cmd_sweep(o, std::cout);
    if (*paint) return acord::cli::cmd_paint(o, std::cout);
    if (*score) return acord::cli::cmd_score(o, std::cout);
    if (*serve) return acord::cli::cmd_serve(o, std::cout);
  } catch (const acord::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const acord::RequestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
