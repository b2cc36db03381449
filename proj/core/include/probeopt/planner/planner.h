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

// Differentiable Cartesian motion planning with trapezoidal velocity
// profiles. Endpoints are 1x3 tape nodes (x, y, z); durations and sampled
// waypoints are differentiable functions of them.

#ifndef PROBEOPT_PLANNER_PLANNER_H_
#define PROBEOPT_PLANNER_PLANNER_H_

#include <vector>

#include "probeopt/autodiff/tape.h"
#include "probeopt/core/types.h"

namespace probeopt::planner {

// Rest-to-rest duration over distance d: d/v + v/a when the cruise speed is
// reached (d >= v^2/a), 2 sqrt(d/a) otherwise.
double SegmentDuration(double d, double v, double a);
// Time at which a rest-to-rest move over `total` has covered `reached`.
double TimeToReach(double total, double reached, double v, double a);

// Differentiable duration between two 1x3 poses. Coincident endpoints give a
// constant zero (zero subgradient).
ad::Var SegmentDuration(ad::Var from, ad::Var to, double v, double a);

struct PlannedSegment {
  ad::Var waypoints;  // n x 4 rows of (t, x, y, z), t relative to start
  ad::Var duration;   // 1x1
};

// Samples n >= 2 waypoints at uniform times along the straight segment.
PlannedSegment PlanLinear(ad::Var from, ad::Var to, double v, double a,
                          int n_samples);

struct PlannerConfig {
  // Surface stiffness assumed for the nominal contact depth
  // (-f_contact / stiffness). Infinity plans contact exactly at z = 0.
  double nominal_stiffness = 10.0;
};

struct SearchPlan {
  ad::Var approach;               // 1x1
  std::vector<ad::Var> lateral;   // K x (1x1)
  std::vector<ad::Var> descent;
  std::vector<ad::Var> depart;
  ad::Var cumulative;             // K x 1, c_k
  int planner_calls = 0;
};

// Nominal timing of every probe cycle assuming each probe misses:
// c_k = approach + sum_{j<=k} (lateral_j + descent_j + depart_j).
// `point_to` is 1x3, `pattern` Kx2 (offsets). Dynamics come from `params`.
SearchPlan ComposeSearchPlan(const Pose& start, ad::Var point_to,
                             ad::Var pattern, const TaskParams& params,
                             const PlannerConfig& cfg = {});

// Constant-valued convenience wrapper for the same plan.
std::vector<double> NominalCycleTimes(const Pose& start,
                                      const TaskParams& params,
                                      const PlannerConfig& cfg = {});

}  // namespace probeopt::planner

#endif  // PROBEOPT_PLANNER_PLANNER_H_
