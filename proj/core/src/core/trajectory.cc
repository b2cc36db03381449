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

#include "probeopt/core/trajectory.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "probeopt/core/errors.h"

namespace probeopt {

Pattern NominalGridPattern(std::size_t k, double pitch) {
  if (!(pitch > 0.0) || !std::isfinite(pitch)) {
    throw InvalidArgument("grid pitch must be > 0");
  }
  std::size_t rows = 0;
  for (std::size_t r = 1; r * r <= k; ++r) {
    if (k % r == 0 && k / r - r <= 1) rows = r;
  }
  if (rows == 0) {
    throw InvalidArgument("grid size " + std::to_string(k) +
                          " does not factor as cols x rows with "
                          "|cols - rows| <= 1");
  }
  const std::size_t cols = k / rows;
  const double x0 = -0.5 * pitch * static_cast<double>(cols - 1);
  const double y0 = -0.5 * pitch * static_cast<double>(rows - 1);
  Pattern out;
  out.reserve(k);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out.push_back({x0 + pitch * static_cast<double>(c),
                     y0 + pitch * static_cast<double>(r)});
    }
  }
  return out;
}

namespace {

TrajectoryPoint Lerp(const TrajectoryPoint& a, const TrajectoryPoint& b,
                     double t) {
  const double span = b.t - a.t;
  const double s = span > 0.0 ? (t - a.t) / span : 0.0;
  TrajectoryPoint p;
  p.t = t;
  p.pose.x = a.pose.x + s * (b.pose.x - a.pose.x);
  p.pose.y = a.pose.y + s * (b.pose.y - a.pose.y);
  p.pose.z = a.pose.z + s * (b.pose.z - a.pose.z);
  p.fz = a.fz + s * (b.fz - a.fz);
  return p;
}

}  // namespace

Trajectory ResampleTrajectory(const Trajectory& traj, std::size_t n) {
  if (traj.points.size() < 2) {
    throw InvalidArgument("resampling needs at least 2 points");
  }
  if (n < 2) throw InvalidArgument("resampling target must be >= 2 points");
  const auto& pts = traj.points;
  const double t0 = pts.front().t;
  const double t1 = pts.back().t;
  Trajectory out;
  out.success = traj.success;
  out.points.reserve(n);
  out.points.push_back(pts.front());
  std::size_t seg = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double t =
        t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
    while (seg + 2 < pts.size() && pts[seg + 1].t <= t) ++seg;
    out.points.push_back(Lerp(pts[seg], pts[seg + 1], t));
  }
  out.points.push_back(pts.back());
  return out;
}

TrajectoryErrors TrajectoryMetrics(const Trajectory& pred,
                                   const Trajectory& gt) {
  if (pred.empty() || gt.empty()) {
    throw InvalidArgument("trajectory metrics need non-empty inputs");
  }
  TrajectoryErrors e;
  const std::size_t lp = pred.size(), lg = gt.size();
  e.mae_L = std::abs(static_cast<double>(lp) - static_cast<double>(lg));
  const std::size_t n = std::min(lp, lg);
  if (n < 2) {
    // Single-point comparison; nothing to resample.
    e.mae_P = Distance(pred.points.front().pose, gt.points.front().pose);
    e.mae_F = std::abs(pred.points.front().fz - gt.points.front().fz);
    return e;
  }
  const Trajectory a = ResampleTrajectory(pred, n);
  const Trajectory b = ResampleTrajectory(gt, n);
  double sp = 0.0, sf = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sp += Distance(a.points[i].pose, b.points[i].pose);
    sf += std::abs(a.points[i].fz - b.points[i].fz);
  }
  e.mae_P = sp / static_cast<double>(n);
  e.mae_F = sf / static_cast<double>(n);
  return e;
}

TrajectoryErrors TimeAlignedMetrics(const Trajectory& pred,
                                    const Trajectory& gt) {
  if (pred.empty() || gt.empty()) {
    throw InvalidArgument("trajectory metrics need non-empty inputs");
  }
  TrajectoryErrors e;
  const std::size_t lp = pred.size(), lg = gt.size();
  e.mae_L = std::abs(static_cast<double>(lp) - static_cast<double>(lg));
  const std::size_t n = std::min(lp, lg);
  double sp = 0.0, sf = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sp += Distance(pred.points[i].pose, gt.points[i].pose);
    sf += std::abs(pred.points[i].fz - gt.points[i].fz);
  }
  e.mae_P = sp / static_cast<double>(n);
  e.mae_F = sf / static_cast<double>(n);
  return e;
}

double F1Score(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  if (denom == 0) {
    throw UndefinedMetric("F1 undefined: tp, fp and fn are all zero");
  }
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace probeopt
