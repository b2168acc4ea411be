// Command-line front end: generate, train, compare, sweep, noise-exp.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ukd/common/errors.h"
#include "ukd/harness/commands.h"

namespace {

void AddCommon(CLI::App* cmd, ukd::harness::CommandOptions& o,
               std::uint64_t& seed, std::string& out, int& jobs) {
  cmd->add_option("--config", o.config_path, "Experiment config file");
  cmd->add_option("--seed", seed, "Master seed (overrides run.seed)");
  cmd->add_option("--out", out, "Output directory (overrides run.output_dir)");
  cmd->add_option("--set", o.overrides,
                  "Config override section.key=value (repeatable)");
  cmd->add_option("--jobs", jobs, "Parallel independent runs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Debiased conversion-rate estimation experiments"};
  app.require_subcommand(1);
  ukd::harness::CommandOptions o;
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 0;
  int n_seeds = 0;
  std::string models;

  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset and its oracle");
  auto* train = app.add_subcommand("train", "Train one model and report test metrics");
  auto* compare = app.add_subcommand("compare", "Compare models over several seeds");
  auto* sweep = app.add_subcommand("sweep", "Grid sweep of one hyperparameter");
  auto* noise = app.add_subcommand("noise-exp", "Noisy-label identification experiment");
  for (auto* cmd : {generate, train, compare, sweep, noise}) {
    AddCommon(cmd, o, seed, out, jobs);
  }
  train->add_option("--model", o.model, "Model name")->required();
  train->add_option("--pseudo-labels", o.pseudo_labels,
                    "Pseudo-label file for a standalone student run");
  compare->add_option("--models", models, "Comma separated model names");
  for (auto* cmd : {compare, sweep, noise}) {
    cmd->add_option("--n-seeds", n_seeds, "Repetitions");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << '\n';
    return ukd::ExitCode(ukd::ErrorCategory::kUsage);
  }

  auto given = [](CLI::App* cmd, const char* flag) {
    return cmd->count(flag) > 0;
  };
  CLI::App* cmd = app.get_subcommands().front();
  if (given(cmd, "--seed")) o.seed = seed;
  if (given(cmd, "--out")) o.out = out;
  if (given(cmd, "--jobs")) o.jobs = jobs;
  if (cmd != generate && cmd != train && given(cmd, "--n-seeds")) {
    o.n_seeds = n_seeds;
  }
  if (!models.empty()) {
    std::string item;
    for (char c : models + ",") {
      if (c == ',') {
        if (!item.empty()) o.models.push_back(item);
        item.clear();
      } else if (c != ' ') {
        item += c;
      }
    }
  }

  try {
    if (cmd == generate) ukd::harness::CmdGenerate(o, std::cout);
    if (cmd == train) ukd::harness::CmdTrain(o, std::cout);
    if (cmd == compare) ukd::harness::CmdCompare(o, std::cout);
    if (cmd == sweep) ukd::harness::CmdSweep(o, std::cout);
    if (cmd == noise) ukd::harness::CmdNoiseExperiment(o, std::cout);
  } catch (const ukd::Error& e) {
    std::cerr << "error: " << ukd::CategoryName(e.category()) << ": "
              << e.what() << '\n';
    return ukd::ExitCode(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
