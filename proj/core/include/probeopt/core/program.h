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

// Skill-based program representation and its JSON file format:
//
//   {"skills": [{"kind": "LinearMotion", "params": {...}},
//               {"kind": "ProbeSearch",  "params": {<TaskParams fields>}}]}
//
// Field names are the snake_case member names; units mm, mm/s, mm/s^2, N, s.

#ifndef PROBEOPT_CORE_PROGRAM_H_
#define PROBEOPT_CORE_PROGRAM_H_

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>
#include "probeopt/core/types.h"

namespace probeopt {

struct LinearMotion {
  Pose target;
  double v = 50.0;
  double a = 500.0;
};

struct ContactMotion {
  Pose direction{0.0, 0.0, -1.0};
  double distance = 0.0;
  double v = 20.0;
  double a = 500.0;
  double f_stop = 5.0;
};

struct ProbeSearch {
  TaskParams params;
};

using Skill = std::variant<LinearMotion, ContactMotion, ProbeSearch>;

class Program {
 public:
  Program() = default;
  // Throws InvalidArgument unless exactly one ProbeSearch skill is present.
  explicit Program(std::vector<Skill> skills);

  // Approach-free program around a single probe search.
  static Program ForSearch(const TaskParams& params);

  const std::vector<Skill>& skills() const { return skills_; }
  const TaskParams& search_params() const;
  void set_search_params(const TaskParams& params);

 private:
  std::vector<Skill> skills_;
  std::size_t search_index_ = 0;
};

// JSON conversions; doubles are emitted in shortest round-trip form, so
// every finite value survives a write/read cycle bit-exactly.
nlohmann::json ToJson(const Pose& p);
nlohmann::json ToJson(const TaskParams& p);
nlohmann::json ToJson(const ParamDomain& d);
nlohmann::json ToJson(const Program& program);
Pose PoseFromJson(const nlohmann::json& j);
TaskParams TaskParamsFromJson(const nlohmann::json& j);
ParamDomain ParamDomainFromJson(const nlohmann::json& j,
                                const ParamDomain& defaults = {});
Program ProgramFromJson(const nlohmann::json& j);

void SaveProgram(const Program& program, const std::filesystem::path& path);
Program LoadProgram(const std::filesystem::path& path);

}  // namespace probeopt

#endif  // PROBEOPT_CORE_PROGRAM_H_
