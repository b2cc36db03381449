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

// Ground-truth simulator of the force-controlled probe search.
//
// The part surface is a linear spring (stiffness N/mm) with a cylindrical
// hole of radius capture_radius at the (hidden) hole center. A probe whose
// axis lies inside that radius descends the full commanded depth without
// resistance and ends the search with success. Otherwise the contact motion
// stops where the noiseless spring force reaches f_contact and the tool
// departs back to depart_height. Recorded forces carry Gaussian noise.

#ifndef PROBEOPT_SIMENV_SIMULATOR_H_
#define PROBEOPT_SIMENV_SIMULATOR_H_

#include <cstdint>
#include <vector>

#include "probeopt/core/types.h"

namespace probeopt::sim {

struct SimConfig {
  double offset_bound = 2.0;       // mm, per-axis hole offset
  double residual_bound = 0.5;     // mm, per-axis marker error
  double capture_radius = 0.75;    // mm
  double hole_depth = 5.0;         // mm
  double stiffness = 10.0;         // N/mm
  double force_noise_sigma = 0.3;  // N
  double sample_dt = 0.01;         // s
  int image_height = 32;
  int image_width = 32;
  double pixel_pitch = 0.25;       // mm/px
  double image_noise_sigma = 0.05;
  double marker_radius = 1.5;      // mm
  double background_intensity = 0.7;
  double marker_intensity = 0.1;
  double workspace_half_width = 10.0;  // mm
  Pose home{0.0, 0.0, 25.0};

  // Throws InvalidArgument on non-positive sizes or rates.
  void Validate() const;
};

struct EnvState {
  double hx = 0.0, hy = 0.0;  // true hole center
  double mx = 0.0, my = 0.0;  // visible marker
  double capture_radius = 0.75;
  double hole_depth = 5.0;
  double surface_stiffness = 10.0;
  double force_noise_sigma = 0.3;

  bool operator==(const EnvState&) const = default;
};

// Top-down grayscale observation, row-major, row index along +y and column
// index along +x, centered on the nominal hole axis.
struct EnvImage {
  int height = 0;
  int width = 0;
  double pixel_pitch = 0.25;
  std::vector<float> pixels;

  float at(int row, int col) const { return pixels[row * width + col]; }
  bool operator==(const EnvImage&) const = default;
};

struct ProbeOutcome {
  std::vector<TrajectoryPoint> segment;
  bool hole_found = false;
};

struct ExecutionRecord {
  std::uint64_t seed = 0;
  EnvState env;
  TaskParams params;
  EnvImage image;
  Trajectory trajectory;

  double cycle_time() const {
    return trajectory.empty() ? 0.0 : trajectory.points.back().t;
  }
  std::size_t probe_count() const { return trajectory.probe_boundaries.size(); }
};

// Deterministic 64-bit seed for an independent random stream.
std::uint64_t StreamSeed(std::uint64_t seed, std::uint64_t stream);

EnvState SampleEnvironment(std::uint64_t seed, const SimConfig& cfg);
EnvImage RenderImage(const EnvState& env, const SimConfig& cfg,
                     std::uint64_t seed);

// True when a probe axis at (x, y) enters the hole.
bool InCapture(const EnvState& env, double x, double y);

// One probe loop starting from `from` at time zero: lateral move to the
// probe at depart_height, contact motion, and depart on a miss. Throws
// WorkspaceError for probes outside the workspace box.
ProbeOutcome ExecuteProbe(const EnvState& env, const Offset& probe_xy,
                          const TaskParams& params, std::uint64_t seed,
                          const SimConfig& cfg = {});
ProbeOutcome ExecuteProbe(const EnvState& env, const Offset& probe_xy,
                          const TaskParams& params, std::uint64_t seed,
                          const SimConfig& cfg, const Pose& from);

// Approach to point_to, then probes in pattern order until one finds the
// hole. The simulator only ever receives program parameters.
ExecutionRecord ExecuteProgram(const EnvState& env, const TaskParams& params,
                               std::uint64_t seed, const SimConfig& cfg = {});

// Reference success decision computed from geometry alone.
bool GeometricSuccess(const EnvState& env, const TaskParams& params);

}  // namespace probeopt::sim

#endif  // PROBEOPT_SIMENV_SIMULATOR_H_
