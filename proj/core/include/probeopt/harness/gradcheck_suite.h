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
// Finite-difference verification of every differentiable layer: tape
// primitives, planner timing and waypoints, and the full objective through
// a shadow program with random weights.

#ifndef PROBEOPT_HARNESS_GRADCHECK_SUITE_H_
#define PROBEOPT_HARNESS_GRADCHECK_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace probeopt::harness {

struct GradCheckOptions {
  std::uint64_t seed = 0;
  int per_primitive = 3;
  int planner_instances = 24;
  int end_to_end_instances = 20;
  double primitive_tolerance = 1e-6;
  double end_to_end_tolerance = 1e-4;
};

struct GradCheckEntry {
  std::string suite;  // "primitive", "planner" or "end_to_end"
  std::string name;
  int instances = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;

  bool pass() const { return max_rel_error <= tolerance; }
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  int instances() const;
  bool pass() const;
  double max_error(const std::string& suite) const;
};

GradCheckReport RunGradCheckSuite(const GradCheckOptions& opts = {});

// One line per entry plus per-suite maxima.
std::string FormatGradCheck(const GradCheckReport& r);

}  // namespace probeopt::harness

#endif  // PROBEOPT_HARNESS_GRADCHECK_SUITE_H_
