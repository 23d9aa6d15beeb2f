// Experiment runner: subcommands dispatch JSON configs onto the library.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lcdf/config.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("config", "cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"channel-universality numerics: overlaps, Fisher information, "
               "low-coordinate-degree advantages, spiked-matrix scans"};
  app.require_subcommand(1);

  const char* names[] = {"fisher",        "overlap",  "advantage", "exact",
                         "universality",  "spectral", "phase-diagram"};
  const char* blurbs[] = {
      "Fisher information of a channel block",
      "channel overlap R(x1, x2)",
      "Monte-Carlo advantage estimators",
      "exact brute-force engine on a discrete model",
      "paired-stream universality report",
      "spiked-matrix eigenvalue statistics",
      "lambda scan with CSV output for transition plots"};

  struct Parsed {
    std::string config_path;
    lcdf::CliOverrides overrides;
  };
  std::vector<std::shared_ptr<Parsed>> parsed;
  std::vector<CLI::App*> subs;

  auto add_common = [&](CLI::App* sub) {
    auto state = std::make_shared<Parsed>();
    sub->add_option("config", state->config_path, "JSON experiment config")->required();
    sub->add_option("--seed", [state](const CLI::results_t& values) {
      state->overrides.seed = std::stoull(values[0]);
      return true;
    }, "master seed override");
    sub->add_option("--threads", [state](const CLI::results_t& values) {
      state->overrides.threads = std::stoi(values[0]);
      return true;
    }, "worker threads (also env LCDF_THREADS)");
    sub->add_option("--out", [state](const CLI::results_t& values) {
      state->overrides.out_dir = values[0];
      return true;
    }, "output directory for result.json / scan.csv");
    parsed.push_back(state);
    return state;
  };

  std::vector<std::shared_ptr<Parsed>> states;
  for (std::size_t i = 0; i < std::size(names); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    states.push_back(add_common(sub));
    subs.push_back(sub);
  }
  CLI::App* selftest = app.add_subcommand("selftest", "run the built-in invariant suite");

  CLI11_PARSE(app, argc, argv);

  if (selftest->parsed()) return lcdf::run_selftest();
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      return lcdf::run_experiment(names[i], read_file(states[i]->config_path),
                                  states[i]->overrides);
    } catch (const CLI::ValidationError& err) {
      std::cerr << err.what() << "\n";
      return lcdf::kExitConfig;
    }
  }
  return lcdf::kExitConfig;
}
