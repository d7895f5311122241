// netenv: train, evaluate and sample network-defense environments.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "netenv/harness.hpp"

namespace {

void configure_logging() {
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
  const char* level = std::getenv("NETENV_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

netenv::Logger spd_logger() {
  netenv::Logger log;
  log.info = [](const std::string& m) { spdlog::info(m); };
  log.debug = [](const std::string& m) { spdlog::debug(m); };
  log.error = [](const std::string& m) { spdlog::error(m); };
  return log;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"netenv: network environment design for deceptive cyber defense"};
  app.require_subcommand(1);

  netenv::CommandOptions opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "Seed, overriding the config's");
    sub->add_option("--override", opt.overrides, "KEY=VAL; bare keys address train.KEY");
  };

  auto* train = app.add_subcommand("train", "Train a DQN defender");
  add_common(train);
  train->add_option("--out", opt.out_dir, "Output directory");
  train->add_flag("--plot", opt.plot, "Also write curve.svg");

  auto* eval = app.add_subcommand("eval", "Evaluate a frozen policy");
  add_common(eval);
  eval->add_option("--out", opt.out_dir, "Output directory");
  eval->add_option("--episodes", opt.episodes, "Episodes to run (default 100)");
  eval->add_option("--weights", opt.weights_path, "weights.bin from train");
  eval->add_option("--baseline", opt.baseline, "Baseline policy instead of weights")
      ->check(CLI::IsMember({"random", "heuristic"}));

  auto* sample = app.add_subcommand("sample", "Print sampled environment configs");
  add_common(sample);
  sample->add_option("--episodes", opt.episodes, "Number of configs (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : netenv::kExitConfig;
  }
  const auto log = spd_logger();
  if (app.got_subcommand(train)) return netenv::cmd_train(opt, log);
  if (app.got_subcommand(eval)) return netenv::cmd_eval(opt, std::cout, log);
  return netenv::cmd_sample(opt, std::cout, log);
}
