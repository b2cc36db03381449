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
// Supervision targets derived from executed trajectories.

#ifndef PROBEOPT_TRAINING_TARGETS_H_
#define PROBEOPT_TRAINING_TARGETS_H_

#include <vector>

#include "probeopt/autodiff/tape.h"
#include "probeopt/mutt/model.h"
#include "probeopt/mutt/weights.h"
#include "probeopt/simenv/simulator.h"

namespace probeopt::train {

// One row per executed probe. Targets are raw (unnormalized) and laid out
// like the probe model output: profile z (P), profile fz (P), duration,
// contact depth.
struct ProbeTargets {
  ad::Matrix context;
  ad::Matrix targets;
};

// The profile of probe k is its trajectory slice from the start of the
// contact motion to the start of the next lateral move (or the end),
// resampled to profile_len points uniformly in time.
ProbeTargets ExtractProbeTargets(const sim::ExecutionRecord& rec,
                                 int profile_len);
std::vector<mutt::ProbePrediction> TargetsAsPredictions(
    const ProbeTargets& t);

// Hole-found indicator per executed probe: zeros, with a one on the last
// probe when the search succeeded.
std::vector<int> ProbeLabels(const sim::ExecutionRecord& rec);

// Input and output statistics for the probe model. Feature statistics are
// left at identity; they depend on the probe model and are filled in by
// search training.
mutt::Normalization ComputeStats(
    const std::vector<sim::ExecutionRecord>& train, int profile_len);

// Maps raw targets to and from the normalized training space.
ad::Matrix NormalizeTargets(const ad::Matrix& raw,
                            const mutt::Normalization& n);

}  // namespace probeopt::train

#endif  // PROBEOPT_TRAINING_TARGETS_H_
