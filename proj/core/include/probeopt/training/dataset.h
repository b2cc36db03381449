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
// Simulated data collection and the on-disk dataset layout:
//
//   <dir>/meta.json     provenance, split sizes, normalization statistics
//   <dir>/train.ndjson  one ExecutionRecord per line
//   <dir>/test.ndjson
//
// Episode i uses seed EpisodeSeed(base, i); the test split is the last
// n_test episodes, so splits are disjoint by construction.

#ifndef PROBEOPT_TRAINING_DATASET_H_
#define PROBEOPT_TRAINING_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "probeopt/core/types.h"
#include "probeopt/mutt/weights.h"
#include "probeopt/simenv/simulator.h"

namespace probeopt::train {

struct CollectOptions {
  std::size_t test_size = 200;
  int pattern_size = 20;
  int profile_len = 25;  // for the stored normalization statistics
  int threads = 1;
};

struct DatasetMeta {
  sim::SimConfig sim;
  ParamDomain domain;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  int pattern_size = 20;
  int profile_len = 25;
  std::string config_hash;
  mutt::Normalization stats;  // from the train split only
};

struct Dataset {
  DatasetMeta meta;
  std::vector<sim::ExecutionRecord> train;
  std::vector<sim::ExecutionRecord> test;
};

std::uint64_t EpisodeSeed(std::uint64_t base, std::size_t episode);

// Test records reserved out of n: test_size when n > test_size, else n / 5.
std::size_t TestCount(std::size_t n, std::size_t test_size);

// Uniform draw from the domain: point_to in its box, every offset in the
// pattern box, dynamics in their ranges.
TaskParams SampleTaskParams(const ParamDomain& domain, int pattern_size,
                            std::uint64_t seed);

// The hand-written baseline: a nominal grid (pitch 1 mm) around a
// point_to drawn like collection data, default dynamics.
TaskParams BaselineParams(const ParamDomain& domain, int pattern_size,
                          std::uint64_t seed);

// Hash of the simulator and domain settings that produced a dataset.
std::string ConfigHash(const sim::SimConfig& cfg, const ParamDomain& domain);

Dataset CollectDataset(const sim::SimConfig& cfg, const ParamDomain& domain,
                       std::size_t n, std::uint64_t seed,
                       const CollectOptions& opts = {});

// First n_train training records (stats recomputed), same test split.
Dataset TrainPrefix(const Dataset& ds, std::size_t n_train);

void SaveDataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset LoadDataset(const std::filesystem::path& dir);

struct SplitSummary {
  std::size_t count = 0;
  std::size_t success = 0;
  std::size_t fail = 0;
  double mean_length = 0.0;  // points
  double std_length = 0.0;
  double mean_force = 0.0;   // N, z-force over all points
  double std_force = 0.0;
  double mean_probes = 0.0;
};
SplitSummary Summarize(const std::vector<sim::ExecutionRecord>& records);
// Markdown table with train and test columns.
std::string SummaryTable(const Dataset& ds);

}  // namespace probeopt::train

#endif  // PROBEOPT_TRAINING_DATASET_H_
