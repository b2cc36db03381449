// Copyright 2026 The ProbeOpt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// probeopt <collect|train|eval|optimize|ablate|gradcheck> --config <path>

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "probeopt/harness/commands.h"

int main(int argc, char** argv) {
  using probeopt::harness::CommandFlags;
  CLI::App app{"Probe-search program optimization"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  CommandFlags flags;
  std::string config;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON configuration file")
        ->check(CLI::ExistingFile);
    sub->add_flag("--print-config", flags.print_config,
                  "Print the effective configuration and exit");
    sub->add_option("--seed", flags.seed, "Base seed (overrides config)");
  };

  CLI::App* collect = app.add_subcommand("collect", "Collect a dataset");
  common(collect);
  collect->add_option("--n", flags.n, "Number of episodes");
  collect->add_option("--out", flags.out, "Dataset directory");

  CLI::App* train = app.add_subcommand("train", "Train the shadow models");
  common(train);
  train->add_option("--stage", flags.stage, "probe, search or both")
      ->check(CLI::IsMember({"probe", "search", "both"}));

  CLI::App* eval = app.add_subcommand("eval", "Evaluate predictions");
  common(eval);
  eval->add_flag("--oracle", flags.oracle, "Use the ground-truth stub");

  CLI::App* optimize =
      app.add_subcommand("optimize", "Optimize programs on unseen envs");
  common(optimize);
  optimize->add_flag("--oracle", flags.oracle, "Use the oracle shadow stub");
  optimize->add_option("--n-envs", flags.n_envs, "Number of environments");

  CLI::App* ablate = app.add_subcommand("ablate", "Dataset size ablation");
  common(ablate);
  ablate->add_option("--sizes", flags.sizes, "Training subset sizes")
      ->delimiter(',');

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  common(gradcheck);
  gradcheck->add_option("--corrupt-op", flags.corrupt_op)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : probeopt::harness::kExitUsage;
  }
  if (!config.empty()) flags.config = config;
  const std::string command = app.get_subcommands().front()->get_name();
  return probeopt::harness::RunCommand(command, flags, std::cout, std::cerr);
}
