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

// Value types shared by every module. Units: mm, s, N.
//
// Task frame: the part surface is the plane z = 0, the nominal hole axis
// passes through the origin and z grows away from the surface. Tool
// orientation is fixed, so a pose is just a Cartesian position.

#ifndef PROBEOPT_CORE_TYPES_H_
#define PROBEOPT_CORE_TYPES_H_

#include <cstddef>
#include <utility>
#include <vector>

namespace probeopt {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Pose&) const = default;
};

double Distance(const Pose& a, const Pose& b);

// Planar probe offset relative to the search center.
struct Offset {
  double dx = 0.0;
  double dy = 0.0;

  bool operator==(const Offset&) const = default;
};

using Pattern = std::vector<Offset>;

struct TrajectoryPoint {
  double t = 0.0;
  Pose pose;
  double fz = 0.0;  // compression positive
};

// Half-open index range [first, second) into Trajectory::points.
using IndexRange = std::pair<std::size_t, std::size_t>;

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  bool success = false;
  // One range per executed probe, covering its contact and depart motions.
  std::vector<IndexRange> probe_boundaries;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  double duration() const {
    return points.empty() ? 0.0 : points.back().t - points.front().t;
  }
};

// Optimizable program parameters plus the frozen dynamics settings.
struct TaskParams {
  Pose point_to{0.0, 0.0, 5.0};
  Pattern pattern;
  double v_lateral = 50.0;    // mm/s
  double v_descent = 20.0;    // mm/s
  double accel = 500.0;       // mm/s^2
  double f_contact = 5.0;     // N
  double probe_depth = 6.0;   // mm below the surface
  double depart_height = 5.0; // mm above the surface

  // Absolute planar position of probe k.
  Offset ProbePosition(std::size_t k) const {
    return {point_to.x + pattern[k].dx, point_to.y + pattern[k].dy};
  }

  // Throws InvalidArgument when a dynamics field is non-positive or any
  // value is non-finite.
  void Validate() const;
};

struct Range {
  double min = 0.0;
  double max = 0.0;

  double Clamp(double v) const;
  bool Contains(double v) const { return v >= min && v <= max; }
};

// Box from which program parameters are drawn and inside which the
// optimizer must stay.
struct ParamDomain {
  Range point_to_x{-2.0, 2.0};
  Range point_to_y{-2.0, 2.0};
  Range point_to_z{5.0, 5.0};
  Range pattern_dx{-2.0, 2.0};
  Range pattern_dy{-2.0, 2.0};
  Range v_lateral{30.0, 70.0};
  Range v_descent{10.0, 30.0};
  Range accel{300.0, 700.0};
  Range f_contact{3.0, 8.0};

  void Validate() const;
  bool Contains(const TaskParams& params) const;
  // Clamps point_to and every pattern offset into the box. Dynamics fields
  // are left untouched since they are not optimized.
  TaskParams Project(const TaskParams& params) const;
};

struct PredictionMetrics {
  double f1 = 0.0;
  std::size_t true_pos = 0;
  std::size_t true_neg = 0;
  std::size_t false_pos = 0;
  std::size_t false_neg = 0;
  double mae_L = 0.0;  // points
  double mae_P = 0.0;  // mm
  double mae_F = 0.0;  // N
  double mean_length = 0.0;  // mean ground-truth length, points
};

struct OptimizationMetrics {
  double ct_before = 0.0;
  double ct_after = 0.0;
  double probes_before = 0.0;
  double probes_after = 0.0;
  double sr_before = 0.0;
  double sr_after = 0.0;
};

}  // namespace probeopt

#endif  // PROBEOPT_CORE_TYPES_H_
