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

#include "probeopt/planner/planner.h"

#include <cmath>
#include <limits>

#include "probeopt/autodiff/ops.h"
#include "probeopt/core/errors.h"

namespace probeopt::planner {
namespace {

void RequireDynamics(double v, double a) {
  if (!(v > 0.0) || !(a > 0.0)) {
    throw InvalidArgument("planner: velocity and acceleration must be > 0");
  }
}

// Distance covered at time t on a rest-to-rest profile of total duration T
// over distance d. The branch is selected by value; the expression stays
// differentiable in d and T.
ad::Var DistanceAt(ad::Var t, ad::Var d, ad::Var total, double v, double a,
                   bool trapezoid) {
  const double tv = t.scalar();
  const double Tv = total.scalar();
  const double ramp = trapezoid ? v / a : 0.5 * Tv;
  if (tv <= ramp) return 0.5 * a * ad::Square(t);
  if (trapezoid && tv <= Tv - ramp) return v * t - v * v / (2.0 * a);
  return d - 0.5 * a * ad::Square(total - t);
}

}  // namespace

double SegmentDuration(double d, double v, double a) {
  RequireDynamics(v, a);
  if (d <= 0.0) return 0.0;
  if (d >= v * v / a) return d / v + v / a;
  return 2.0 * std::sqrt(d / a);
}

double TimeToReach(double total, double reached, double v, double a) {
  RequireDynamics(v, a);
  if (reached <= 0.0) return 0.0;
  if (reached >= total) return SegmentDuration(total, v, a);
  const bool trapezoid = total >= v * v / a;
  const double T = SegmentDuration(total, v, a);
  const double ramp = trapezoid ? v / a : 0.5 * T;
  const double ramp_dist = 0.5 * a * ramp * ramp;
  if (reached <= ramp_dist) return std::sqrt(2.0 * reached / a);
  if (trapezoid && reached <= total - ramp_dist) {
    return ramp + (reached - ramp_dist) / v;
  }
  return T - std::sqrt(2.0 * (total - reached) / a);
}

ad::Var SegmentDuration(ad::Var from, ad::Var to, double v, double a) {
  RequireDynamics(v, a);
  ad::Tape& tape = *from.tape();
  ad::Var diff = to - from;
  const double d2 = diff.value().squaredNorm();
  if (d2 == 0.0) return tape.Scalar(0.0);
  ad::Var d = ad::Sqrt(ad::Sum(ad::Square(diff)));
  if (d.scalar() >= v * v / a) return d * (1.0 / v) + v / a;
  return 2.0 * ad::Sqrt(d * (1.0 / a));
}

PlannedSegment PlanLinear(ad::Var from, ad::Var to, double v, double a,
                          int n_samples) {
  RequireDynamics(v, a);
  if (n_samples < 2) throw InvalidArgument("PlanLinear: n_samples must be >= 2");
  if (from.rows() != 1 || from.cols() != 3 || to.rows() != 1 ||
      to.cols() != 3) {
    throw ShapeError("PlanLinear: endpoints must be 1x3");
  }
  ad::Tape& tape = *from.tape();
  PlannedSegment seg;
  seg.duration = SegmentDuration(from, to, v, a);
  ad::Var diff = to - from;
  const double d2 = diff.value().squaredNorm();
  std::vector<ad::Var> rows;
  rows.reserve(static_cast<std::size_t>(n_samples));
  const ad::Var zero = tape.Scalar(0.0);
  for (int i = 0; i < n_samples; ++i) {
    const double tau = static_cast<double>(i) / (n_samples - 1);
    ad::Var t = seg.duration * tau;
    ad::Var pos;
    if (i == 0) {
      pos = from;
    } else if (i == n_samples - 1) {
      pos = to;
    } else if (d2 == 0.0) {
      pos = from;
    } else {
      ad::Var d = ad::Sqrt(ad::Sum(ad::Square(diff)));
      const bool trapezoid = d.scalar() >= v * v / a;
      ad::Var frac = DistanceAt(t, d, seg.duration, v, a, trapezoid) / d;
      pos = from + diff * frac;
    }
    const ad::Var parts[] = {i == 0 ? zero : t, pos};
    rows.push_back(ad::Concat(parts, 1));
  }
  seg.waypoints = ad::Concat(rows, 0);
  return seg;
}

SearchPlan ComposeSearchPlan(const Pose& start, ad::Var point_to,
                             ad::Var pattern, const TaskParams& params,
                             const PlannerConfig& cfg) {
  if (point_to.rows() != 1 || point_to.cols() != 3) {
    throw ShapeError("ComposeSearchPlan: point_to must be 1x3");
  }
  if (pattern.cols() != 2 || pattern.rows() < 1) {
    throw ShapeError("ComposeSearchPlan: pattern must be Kx2");
  }
  ad::Tape& tape = *point_to.tape();
  const Eigen::Index k_count = pattern.rows();
  SearchPlan plan;
  ad::Var home = tape.Constant(
      (ad::Matrix(1, 3) << start.x, start.y, start.z).finished());
  plan.approach = SegmentDuration(home, point_to, params.v_lateral, params.accel);
  plan.planner_calls = 1;

  // Descent and depart depend only on frozen dynamics: the contact motion
  // runs towards -probe_depth and stops at the nominal contact depth.
  const double contact_depth =
      std::isinf(cfg.nominal_stiffness) ? 0.0
                                        : params.f_contact / cfg.nominal_stiffness;
  const double descent_time =
      TimeToReach(params.depart_height + params.probe_depth,
                  params.depart_height + contact_depth, params.v_descent,
                  params.accel);
  const double depart_time = SegmentDuration(
      params.depart_height + contact_depth, params.v_descent, params.accel);

  ad::Var height = tape.Scalar(params.depart_height);
  ad::Var xy_of_point_to = ad::Slice(point_to, 0, 1, 0, 2);
  ad::Var prev = point_to;
  ad::Var elapsed = plan.approach;
  std::vector<ad::Var> cumulative;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    ad::Var xy = xy_of_point_to + ad::Slice(pattern, k, 1, 0, 2);
    const ad::Var parts[] = {xy, height};
    ad::Var above = ad::Concat(parts, 1);
    ad::Var lateral =
        SegmentDuration(prev, above, params.v_lateral, params.accel);
    ad::Var descent = tape.Scalar(descent_time);
    ad::Var depart = tape.Scalar(depart_time);
    plan.planner_calls += 3;
    plan.lateral.push_back(lateral);
    plan.descent.push_back(descent);
    plan.depart.push_back(depart);
    elapsed = elapsed + lateral + descent + depart;
    cumulative.push_back(elapsed);
    prev = above;
  }
  plan.cumulative = ad::Concat(cumulative, 0);
  return plan;
}

std::vector<double> NominalCycleTimes(const Pose& start,
                                      const TaskParams& params,
                                      const PlannerConfig& cfg) {
  ad::Tape tape;
  ad::Matrix pattern(static_cast<Eigen::Index>(params.pattern.size()), 2);
  for (std::size_t k = 0; k < params.pattern.size(); ++k) {
    pattern(static_cast<Eigen::Index>(k), 0) = params.pattern[k].dx;
    pattern(static_cast<Eigen::Index>(k), 1) = params.pattern[k].dy;
  }
  ad::Var pt = tape.Constant(
      (ad::Matrix(1, 3) << params.point_to.x, params.point_to.y,
       params.point_to.z)
          .finished());
  SearchPlan plan =
      ComposeSearchPlan(start, pt, tape.Constant(pattern), params, cfg);
  const ad::Matrix& c = plan.cumulative.value();
  return {c.data(), c.data() + c.size()};
}

}  // namespace probeopt::planner
