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

#include "probeopt/core/types.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "probeopt/core/errors.h"

namespace probeopt {
namespace {

void RequirePositive(double v, const char* name) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw InvalidArgument(std::string("TaskParams.") + name +
                          " must be finite and > 0");
  }
}

void RequireFinite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be finite");
  }
}

void RequireRange(const Range& r, const char* name) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max) {
    throw InvalidArgument(std::string("ParamDomain.") + name +
                          ": need finite min <= max");
  }
}

}  // namespace

double Distance(const Pose& a, const Pose& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void TaskParams::Validate() const {
  RequireFinite(point_to.x, "point_to.x");
  RequireFinite(point_to.y, "point_to.y");
  RequireFinite(point_to.z, "point_to.z");
  for (const Offset& o : pattern) {
    RequireFinite(o.dx, "pattern.dx");
    RequireFinite(o.dy, "pattern.dy");
  }
  if (pattern.empty()) throw InvalidArgument("TaskParams.pattern is empty");
  RequirePositive(v_lateral, "v_lateral");
  RequirePositive(v_descent, "v_descent");
  RequirePositive(accel, "accel");
  RequirePositive(f_contact, "f_contact");
  RequirePositive(probe_depth, "probe_depth");
  RequirePositive(depart_height, "depart_height");
}

double Range::Clamp(double v) const { return std::clamp(v, min, max); }

void ParamDomain::Validate() const {
  RequireRange(point_to_x, "point_to_x");
  RequireRange(point_to_y, "point_to_y");
  RequireRange(point_to_z, "point_to_z");
  RequireRange(pattern_dx, "pattern_dx");
  RequireRange(pattern_dy, "pattern_dy");
  RequireRange(v_lateral, "v_lateral");
  RequireRange(v_descent, "v_descent");
  RequireRange(accel, "accel");
  RequireRange(f_contact, "f_contact");
  if (v_lateral.min <= 0 || v_descent.min <= 0 || accel.min <= 0 ||
      f_contact.min <= 0) {
    throw InvalidArgument("ParamDomain: dynamics ranges must be positive");
  }
}

bool ParamDomain::Contains(const TaskParams& p) const {
  if (!point_to_x.Contains(p.point_to.x) ||
      !point_to_y.Contains(p.point_to.y) ||
      !point_to_z.Contains(p.point_to.z)) {
    return false;
  }
  return std::all_of(p.pattern.begin(), p.pattern.end(), [&](const Offset& o) {
    return pattern_dx.Contains(o.dx) && pattern_dy.Contains(o.dy);
  });
}

TaskParams ParamDomain::Project(const TaskParams& p) const {
  TaskParams out = p;
  out.point_to.x = point_to_x.Clamp(p.point_to.x);
  out.point_to.y = point_to_y.Clamp(p.point_to.y);
  out.point_to.z = point_to_z.Clamp(p.point_to.z);
  for (Offset& o : out.pattern) {
    o.dx = pattern_dx.Clamp(o.dx);
    o.dy = pattern_dy.Clamp(o.dy);
  }
  return out;
}

}  // namespace probeopt
