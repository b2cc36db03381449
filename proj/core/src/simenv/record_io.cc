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

#include "probeopt/simenv/record_io.h"

#include <string>

#include "probeopt/core/errors.h"
#include "probeopt/core/program.h"

namespace probeopt::sim {

using nlohmann::json;

json ToJson(const SimConfig& c) {
  return {{"offset_bound", c.offset_bound},
          {"residual_bound", c.residual_bound},
          {"capture_radius", c.capture_radius},
          {"hole_depth", c.hole_depth},
          {"stiffness", c.stiffness},
          {"force_noise_sigma", c.force_noise_sigma},
          {"sample_dt", c.sample_dt},
          {"image_height", c.image_height},
          {"image_width", c.image_width},
          {"pixel_pitch", c.pixel_pitch},
          {"image_noise_sigma", c.image_noise_sigma},
          {"marker_radius", c.marker_radius},
          {"background_intensity", c.background_intensity},
          {"marker_intensity", c.marker_intensity},
          {"workspace_half_width", c.workspace_half_width},
          {"home", probeopt::ToJson(c.home)}};
}

SimConfig SimConfigFromJson(const json& j, const SimConfig& defaults) {
  SimConfig c = defaults;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("offset_bound", c.offset_bound);
  get("residual_bound", c.residual_bound);
  get("capture_radius", c.capture_radius);
  get("hole_depth", c.hole_depth);
  get("stiffness", c.stiffness);
  get("force_noise_sigma", c.force_noise_sigma);
  get("sample_dt", c.sample_dt);
  get("image_height", c.image_height);
  get("image_width", c.image_width);
  get("pixel_pitch", c.pixel_pitch);
  get("image_noise_sigma", c.image_noise_sigma);
  get("marker_radius", c.marker_radius);
  get("background_intensity", c.background_intensity);
  get("marker_intensity", c.marker_intensity);
  get("workspace_half_width", c.workspace_half_width);
  if (j.contains("home")) c.home = PoseFromJson(j.at("home"));
  c.Validate();
  return c;
}

json RecordToJson(const ExecutionRecord& rec) {
  const auto& pts = rec.trajectory.points;
  std::vector<double> t, x, y, z, fz;
  t.reserve(pts.size());
  x.reserve(pts.size());
  y.reserve(pts.size());
  z.reserve(pts.size());
  fz.reserve(pts.size());
  for (const TrajectoryPoint& p : pts) {
    t.push_back(p.t);
    x.push_back(p.pose.x);
    y.push_back(p.pose.y);
    z.push_back(p.pose.z);
    fz.push_back(p.fz);
  }
  json bounds = json::array();
  for (const auto& [s, e] : rec.trajectory.probe_boundaries) {
    bounds.push_back({s, e});
  }
  // Pixels are widened to double so the text form round-trips the float.
  std::vector<double> image(rec.image.pixels.begin(), rec.image.pixels.end());
  json j;
  j["seed"] = rec.seed;
  j["env"] = {{"hx", rec.env.hx},
              {"hy", rec.env.hy},
              {"mx", rec.env.mx},
              {"my", rec.env.my}};
  j["params"] = probeopt::ToJson(rec.params);
  j["image"] = std::move(image);
  j["trajectory"] = {{"t", t}, {"x", x}, {"y", y}, {"z", z}, {"fz", fz}};
  j["probe_boundaries"] = std::move(bounds);
  j["success"] = rec.trajectory.success;
  return j;
}

ExecutionRecord RecordFromJson(const json& j, const SimConfig& cfg) {
  ExecutionRecord rec;
  try {
    rec.seed = j.at("seed").get<std::uint64_t>();
    const json& env = j.at("env");
    rec.env.hx = env.at("hx").get<double>();
    rec.env.hy = env.at("hy").get<double>();
    rec.env.mx = env.at("mx").get<double>();
    rec.env.my = env.at("my").get<double>();
    rec.env.capture_radius = cfg.capture_radius;
    rec.env.hole_depth = cfg.hole_depth;
    rec.env.surface_stiffness = cfg.stiffness;
    rec.env.force_noise_sigma = cfg.force_noise_sigma;
    rec.params = TaskParamsFromJson(j.at("params"));
    const auto image = j.at("image").get<std::vector<double>>();
    if (image.size() !=
        static_cast<std::size_t>(cfg.image_height * cfg.image_width)) {
      throw LoadError("record image has " + std::to_string(image.size()) +
                      " pixels, config expects " +
                      std::to_string(cfg.image_height * cfg.image_width));
    }
    rec.image.height = cfg.image_height;
    rec.image.width = cfg.image_width;
    rec.image.pixel_pitch = cfg.pixel_pitch;
    rec.image.pixels.assign(image.begin(), image.end());
    const json& tr = j.at("trajectory");
    const auto t = tr.at("t").get<std::vector<double>>();
    const auto x = tr.at("x").get<std::vector<double>>();
    const auto y = tr.at("y").get<std::vector<double>>();
    const auto z = tr.at("z").get<std::vector<double>>();
    const auto fz = tr.at("fz").get<std::vector<double>>();
    if (x.size() != t.size() || y.size() != t.size() || z.size() != t.size() ||
        fz.size() != t.size()) {
      throw LoadError("trajectory channels differ in length");
    }
    rec.trajectory.points.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      rec.trajectory.points[i] = {t[i], {x[i], y[i], z[i]}, fz[i]};
    }
    for (const json& b : j.at("probe_boundaries")) {
      rec.trajectory.probe_boundaries.emplace_back(
          b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>());
    }
    rec.trajectory.success = j.at("success").get<bool>();
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed record: ") + e.what());
  }
  return rec;
}

}  // namespace probeopt::sim
