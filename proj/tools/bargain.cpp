#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bargain/experiments.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

bool setup_logging() {
  auto logger = spdlog::stderr_color_mt("bargain");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("BARGAIN_LOG");
  const std::string level = env ? env : "info";
  if (level == "off") {
    spdlog::set_level(spdlog::level::off);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    std::cerr << "BARGAIN_LOG must be off, info or debug, got '" << level << "'\n";
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (!setup_logging()) return kConfigError;

  CLI::App app{"Bargaining solvers driven by direction and comparison oracles"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_path;
  std::optional<std::string> format;

  for (const char* name : {"toy", "formation", "portfolio"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--out", out_path, "results file, overrides the config");
    sub->add_option("--format", format, "jsonl or csv")
        ->check(CLI::IsMember({"jsonl", "csv"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  bargain::ExperimentConfig cfg;
  try {
    cfg = bargain::load_config(config_path);
    if (bargain::to_string(cfg.experiment) != command) {
      throw bargain::ConfigError("config describes the '" +
                                 std::string(bargain::to_string(cfg.experiment)) +
                                 "' experiment, not '" + command + "'");
    }
    if (seed) cfg.seed = *seed;
    if (out_path) cfg.output = *out_path;
    if (format) cfg.format = *format == "csv" ? bargain::OutputFormat::kCsv
                                              : bargain::OutputFormat::kJsonl;
    cfg.finalize();
  } catch (const bargain::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  } catch (const bargain::Error& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  }

  try {
    spdlog::info("running {} with seed {}", command, *cfg.seed);
    const auto output = bargain::run_experiment(cfg);
    bargain::write_outputs(cfg, output, std::cout);
    spdlog::info("wrote {} records", output.records.size());
  } catch (const bargain::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntimeError;
  }
  return 0;
}
