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
// Pipeline configuration. Every field has a built-in default; a config file
// only lists what it changes. Unknown keys are rejected so typos surface.
//
//   {"seed": 1,
//    "threads": 1,
//    "sim": {...}, "domain": {...}, "model": {...},
//    "collect": {"n", "test_size", "pattern_size"},
//    "train": {"epochs", "search_epochs", "learning_rate", "batch_size",
//              "probe_bce_weight", "success_bce_weight", "length_weight",
//              "grad_clip"},
//    "optimize": {"steps", "learning_rate", "w_s", "w_c", "n_envs"},
//    "ablate": {"sizes": [...]},
//    "paths": {"dataset", "checkpoints", "reports"}}

#ifndef PROBEOPT_HARNESS_CONFIG_H_
#define PROBEOPT_HARNESS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "probeopt/core/types.h"
#include "probeopt/simenv/simulator.h"
#include "probeopt/spi/optimizer.h"
#include "probeopt/training/trainer.h"

namespace probeopt::harness {

struct Paths {
  std::filesystem::path dataset = "out/dataset";
  std::filesystem::path checkpoints = "out/checkpoints";
  std::filesystem::path reports = "out/reports";
};

struct HarnessConfig {
  std::uint64_t seed = 1;
  int threads = 1;
  sim::SimConfig sim;
  ParamDomain domain;
  std::size_t collect_n = 2200;
  std::size_t test_size = 200;
  int pattern_size = 20;
  train::TrainConfig train;  // includes the model architecture
  spi::OptimizeOptions optimize;
  std::size_t n_envs = 100;
  std::vector<std::size_t> ablate_sizes{200, 1000, 2000, 4000};
  Paths paths;

  // Throws InvalidArgument on inconsistent sections.
  void Validate() const;
};

nlohmann::json ToJson(const HarnessConfig& c);
// Overlays `j` on the defaults. Throws InvalidArgument on unknown keys or
// invalid values.
HarnessConfig HarnessConfigFromJson(const nlohmann::json& j);
// Reads a JSON file; an unset path gives the defaults. PROBEOPT_SEED, when
// set, overrides the base seed.
HarnessConfig LoadHarnessConfig(const std::optional<std::filesystem::path>& p);

}  // namespace probeopt::harness

#endif  // PROBEOPT_HARNESS_CONFIG_H_
