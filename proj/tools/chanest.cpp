#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "chanest/config.hpp"
#include "chanest/errors.hpp"
#include "chanest/experiment.hpp"

namespace {

enum exit_code : int { ok = 0, internal = 1, config_error = 2, data_error = 3, numerical_error = 4 };

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
};

chanest::ExperimentConfig resolve_config(const GlobalOptions& g) {
  chanest::ExperimentConfig cfg = g.config_path.empty() ? chanest::ExperimentConfig{} : chanest::load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.out) cfg.output_dir = *g.out;
  if (g.threads) cfg.threads = *g.threads;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel estimation lab: Rayleigh fading, LS/MMSE baselines and a sliding bidirectional GRU"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Config file (key = value); defaults apply when omitted")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out, "Override the output directory");
  app.add_option("--threads", g.threads, "Worker threads for generation and evaluation")->check(CLI::PositiveNumber);

  auto* gen_channels = app.add_subcommand("gen-channels", "Generate train/val/test channel pools (.fch)");
  auto* gen_dataset = app.add_subcommand("gen-dataset", "Generate pilot-framed QPSK datasets (.fds)");
  auto* train = app.add_subcommand("train", "Train the SBGRU model; writes model.fnn and train_log.csv");
  auto* eval = app.add_subcommand("eval", "Evaluate all estimators; writes eval.csv and eval_block.csv");
  auto* sweep = app.add_subcommand("sweep", "Window-length and pilot-density sweeps");
  auto* trace = app.add_subcommand("trace", "Channel-tracking export over one long realization; writes trace.csv");
  auto* print_config = app.add_subcommand("print-config", "Print the resolved configuration");

  std::string axis = "all";
  sweep->add_option("--axis", axis, "window_length, pilot_density or all")
      ->check(CLI::IsMember({"window_length", "pilot_density", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    const chanest::ExperimentConfig cfg = resolve_config(g);
    if (gen_channels->parsed()) {
      chanest::cmd_gen_channels(cfg, std::cout);
    } else if (gen_dataset->parsed()) {
      chanest::cmd_gen_dataset(cfg, std::cout);
    } else if (train->parsed()) {
      chanest::cmd_train(cfg, std::cout);
    } else if (eval->parsed()) {
      chanest::cmd_eval(cfg, std::cout);
    } else if (sweep->parsed()) {
      const auto a = axis == "window_length"   ? chanest::SweepAxis::window_length
                     : axis == "pilot_density" ? chanest::SweepAxis::pilot_density
                                               : chanest::SweepAxis::both;
      chanest::cmd_sweep(cfg, a, std::cout);
    } else if (trace->parsed()) {
      chanest::cmd_trace(cfg, std::cout);
    } else if (print_config->parsed()) {
      std::cout << chanest::serialize_config(cfg);
    }
  } catch (const chanest::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const chanest::ArgumentError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return config_error;
  } catch (const chanest::DomainError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return config_error;
  } catch (const chanest::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return data_error;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return data_error;
  } catch (const chanest::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return internal;
  }
  return ok;
}
