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

#ifndef PROBEOPT_CORE_TRAJECTORY_H_
#define PROBEOPT_CORE_TRAJECTORY_H_

#include <cstddef>

#include "probeopt/core/types.h"

namespace probeopt {

// Builds a k-point grid centered on (0, 0), cols x rows with
// |cols - rows| <= 1 and cols >= rows, in row-major order starting at the
// most negative corner.
Pattern NominalGridPattern(std::size_t k, double pitch);

// Linearly interpolates `traj` at n uniformly spaced times over
// [t_first, t_last]. Endpoints are copied exactly. The success flag is kept;
// probe boundaries are dropped since sample indices no longer line up.
Trajectory ResampleTrajectory(const Trajectory& traj, std::size_t n);

struct TrajectoryErrors {
  double mae_L = 0.0;
  double mae_P = 0.0;
  double mae_F = 0.0;
};

// Length difference in points, plus mean Euclidean position error and mean
// absolute force error after resampling both inputs to the shorter length.
TrajectoryErrors TrajectoryMetrics(const Trajectory& pred,
                                   const Trajectory& gt);

// Same length difference, but positions and forces are compared sample by
// sample over the common prefix. Meaningful when both trajectories are on
// the same sample clock starting at t = 0.
TrajectoryErrors TimeAlignedMetrics(const Trajectory& pred,
                                    const Trajectory& gt);

// 2 tp / (2 tp + fp + fn). Throws UndefinedMetric when all counts are zero.
double F1Score(std::size_t tp, std::size_t fp, std::size_t fn);

}  // namespace probeopt

#endif  // PROBEOPT_CORE_TRAJECTORY_H_
