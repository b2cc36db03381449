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

#include "probeopt/core/program.h"

#include <fstream>
#include <sstream>
#include <type_traits>

#include "probeopt/core/errors.h"

namespace probeopt {

using nlohmann::json;

Program::Program(std::vector<Skill> skills) : skills_(std::move(skills)) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < skills_.size(); ++i) {
    if (std::holds_alternative<ProbeSearch>(skills_[i])) {
      search_index_ = i;
      ++count;
    }
  }
  if (count != 1) {
    throw InvalidArgument("a program needs exactly one ProbeSearch skill, got " +
                          std::to_string(count));
  }
}

Program Program::ForSearch(const TaskParams& params) {
  return Program({ProbeSearch{params}});
}

const TaskParams& Program::search_params() const {
  if (skills_.empty()) throw InvalidArgument("empty program");
  return std::get<ProbeSearch>(skills_[search_index_]).params;
}

void Program::set_search_params(const TaskParams& params) {
  if (skills_.empty()) throw InvalidArgument("empty program");
  std::get<ProbeSearch>(skills_[search_index_]).params = params;
}

json ToJson(const Pose& p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}}; }

Pose PoseFromJson(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(),
          j.at("z").get<double>()};
}

json ToJson(const TaskParams& p) {
  json pattern = json::array();
  for (const Offset& o : p.pattern) pattern.push_back({o.dx, o.dy});
  return {{"point_to", ToJson(p.point_to)},
          {"pattern", pattern},
          {"v_lateral", p.v_lateral},
          {"v_descent", p.v_descent},
          {"accel", p.accel},
          {"f_contact", p.f_contact},
          {"probe_depth", p.probe_depth},
          {"depart_height", p.depart_height}};
}

TaskParams TaskParamsFromJson(const json& j) {
  TaskParams p;
  p.point_to = PoseFromJson(j.at("point_to"));
  p.pattern.clear();
  for (const json& o : j.at("pattern")) {
    if (!o.is_array() || o.size() != 2) {
      throw InvalidArgument("pattern entries must be [dx, dy] pairs");
    }
    p.pattern.push_back({o[0].get<double>(), o[1].get<double>()});
  }
  p.v_lateral = j.at("v_lateral").get<double>();
  p.v_descent = j.at("v_descent").get<double>();
  p.accel = j.at("accel").get<double>();
  p.f_contact = j.at("f_contact").get<double>();
  p.probe_depth = j.at("probe_depth").get<double>();
  p.depart_height = j.at("depart_height").get<double>();
  p.Validate();
  return p;
}

namespace {

json RangeJson(const Range& r) { return json::array({r.min, r.max}); }

Range RangeFrom(const json& j, const char* key, const Range& fallback) {
  if (!j.contains(key)) return fallback;
  const json& r = j.at(key);
  return {r.at(0).get<double>(), r.at(1).get<double>()};
}

}  // namespace

json ToJson(const ParamDomain& d) {
  return {{"point_to_box",
           {{"x", RangeJson(d.point_to_x)},
            {"y", RangeJson(d.point_to_y)},
            {"z", RangeJson(d.point_to_z)}}},
          {"pattern_box",
           {{"dx", RangeJson(d.pattern_dx)}, {"dy", RangeJson(d.pattern_dy)}}},
          {"v_lateral", RangeJson(d.v_lateral)},
          {"v_descent", RangeJson(d.v_descent)},
          {"accel", RangeJson(d.accel)},
          {"f_contact", RangeJson(d.f_contact)}};
}

ParamDomain ParamDomainFromJson(const json& j, const ParamDomain& defaults) {
  ParamDomain d = defaults;
  if (j.contains("point_to_box")) {
    const json& b = j.at("point_to_box");
    d.point_to_x = RangeFrom(b, "x", d.point_to_x);
    d.point_to_y = RangeFrom(b, "y", d.point_to_y);
    d.point_to_z = RangeFrom(b, "z", d.point_to_z);
  }
  if (j.contains("pattern_box")) {
    const json& b = j.at("pattern_box");
    d.pattern_dx = RangeFrom(b, "dx", d.pattern_dx);
    d.pattern_dy = RangeFrom(b, "dy", d.pattern_dy);
  }
  d.v_lateral = RangeFrom(j, "v_lateral", d.v_lateral);
  d.v_descent = RangeFrom(j, "v_descent", d.v_descent);
  d.accel = RangeFrom(j, "accel", d.accel);
  d.f_contact = RangeFrom(j, "f_contact", d.f_contact);
  d.Validate();
  return d;
}

json ToJson(const Program& program) {
  json skills = json::array();
  for (const Skill& skill : program.skills()) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, LinearMotion>) {
            skills.push_back({{"kind", "LinearMotion"},
                              {"params",
                               {{"target", ToJson(s.target)},
                                {"v", s.v},
                                {"a", s.a}}}});
          } else if constexpr (std::is_same_v<T, ContactMotion>) {
            skills.push_back({{"kind", "ContactMotion"},
                              {"params",
                               {{"direction", ToJson(s.direction)},
                                {"distance", s.distance},
                                {"v", s.v},
                                {"a", s.a},
                                {"f_stop", s.f_stop}}}});
          } else {
            skills.push_back(
                {{"kind", "ProbeSearch"}, {"params", ToJson(s.params)}});
          }
        },
        skill);
  }
  return {{"skills", skills}};
}

Program ProgramFromJson(const json& j) {
  std::vector<Skill> skills;
  try {
    for (const json& s : j.at("skills")) {
      const std::string kind = s.at("kind").get<std::string>();
      const json& p = s.at("params");
      if (kind == "LinearMotion") {
        skills.emplace_back(LinearMotion{PoseFromJson(p.at("target")),
                                         p.at("v").get<double>(),
                                         p.at("a").get<double>()});
      } else if (kind == "ContactMotion") {
        skills.emplace_back(ContactMotion{
            PoseFromJson(p.at("direction")), p.at("distance").get<double>(),
            p.at("v").get<double>(), p.at("a").get<double>(),
            p.at("f_stop").get<double>()});
      } else if (kind == "ProbeSearch") {
        skills.emplace_back(ProbeSearch{TaskParamsFromJson(p)});
      } else {
        throw InvalidArgument("unknown skill kind '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed program: ") + e.what());
  }
  return Program(std::move(skills));
}

void SaveProgram(const Program& program, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << ToJson(program).dump(2) << '\n';
}

Program LoadProgram(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  return ProgramFromJson(j);
}

}  // namespace probeopt
