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

#include "probeopt/simenv/simulator.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "probeopt/core/errors.h"

namespace probeopt::sim {
namespace {

// Rest-to-rest motion along a straight line, possibly cut short before the
// planned distance is covered (guarded contact motion).
struct Motion {
  double t0 = 0.0;
  double duration = 0.0;
  Pose from;
  double ux = 0.0, uy = 0.0, uz = 0.0;
  double planned = 0.0;  // distance the profile was planned for
  double v = 0.0, a = 0.0;
};

double ProfileDuration(double d, double v, double a) {
  if (d <= 0.0) return 0.0;
  if (d >= v * v / a) return d / v + v / a;
  return 2.0 * std::sqrt(d / a);
}

// Distance covered after time t.
double ProfileDistance(double t, double d, double v, double a) {
  const double T = ProfileDuration(d, v, a);
  if (t <= 0.0) return 0.0;
  if (t >= T) return d;
  const double ramp = d >= v * v / a ? v / a : 0.5 * T;
  if (t <= ramp) return 0.5 * a * t * t;
  if (t <= T - ramp) return 0.5 * a * ramp * ramp + v * (t - ramp);
  return d - 0.5 * a * (T - t) * (T - t);
}

// Time at which `reached` is covered; bisection on the profile.
double StopTime(double reached, double d, double v, double a) {
  double lo = 0.0, hi = ProfileDuration(d, v, a);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (ProfileDistance(mid, d, v, a) < reached) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

class Timeline {
 public:
  explicit Timeline(const Pose& start) : pos_(start) {}

  double now() const { return now_; }
  const Pose& position() const { return pos_; }

  void MoveLinear(const Pose& to, double v, double a) {
    const double d = Distance(pos_, to);
    if (d == 0.0) return;
    Push(to, d, ProfileDuration(d, v, a), d, v, a);
  }

  // Vertical guarded move from the current height towards z_target that
  // stops after `stop_distance`.
  void GuardedDescent(double z_target, double stop_distance, double v,
                      double a) {
    const double planned = pos_.z - z_target;
    const double reached = std::min(stop_distance, planned);
    const double dur = reached >= planned ? ProfileDuration(planned, v, a)
                                          : StopTime(reached, planned, v, a);
    Pose to = pos_;
    to.z = pos_.z - reached;
    Push(to, planned, dur, reached, v, a);
  }

  const std::vector<Motion>& motions() const { return motions_; }

 private:
  void Push(const Pose& to, double planned, double duration, double length,
            double v, double a) {
    Motion m;
    m.t0 = now_;
    m.duration = duration;
    m.from = pos_;
    m.ux = (to.x - pos_.x) / length;
    m.uy = (to.y - pos_.y) / length;
    m.uz = (to.z - pos_.z) / length;
    m.planned = planned;
    m.v = v;
    m.a = a;
    motions_.push_back(m);
    now_ += duration;
    pos_ = to;
  }

  std::vector<Motion> motions_;
  double now_ = 0.0;
  Pose pos_;
};

double SurfaceForce(const EnvState& env, const Pose& p) {
  if (p.z >= 0.0 || InCapture(env, p.x, p.y)) return 0.0;
  return env.surface_stiffness * (-p.z);
}

std::vector<TrajectoryPoint> Sample(const Timeline& tl, const Pose& start,
                                    const EnvState& env, double dt,
                                    std::uint64_t noise_seed) {
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double end = tl.now();
  const auto& ms = tl.motions();
  std::vector<TrajectoryPoint> pts;
  const auto n_grid = static_cast<std::size_t>(std::floor(end / dt + 1e-9)) + 1;
  pts.reserve(n_grid + 1);
  std::size_t m = 0;
  auto emit = [&](double t) {
    while (m + 1 < ms.size() && t >= ms[m].t0 + ms[m].duration) ++m;
    TrajectoryPoint p;
    p.t = t;
    if (ms.empty()) {
      p.pose = start;
    } else {
      const Motion& mo = ms[m];
      const double s = ProfileDistance(std::min(t - mo.t0, mo.duration),
                                       mo.planned, mo.v, mo.a);
      p.pose = {mo.from.x + mo.ux * s, mo.from.y + mo.uy * s,
                mo.from.z + mo.uz * s};
    }
    p.fz = SurfaceForce(env, p.pose);
    if (env.force_noise_sigma > 0.0) p.fz += env.force_noise_sigma * noise(rng);
    pts.push_back(p);
  };
  for (std::size_t i = 0; i < n_grid; ++i) {
    emit(static_cast<double>(i) * dt);
  }
  if (end - pts.back().t > 1e-9) emit(end);
  return pts;
}

void CheckWorkspace(double x, double y, const SimConfig& cfg) {
  if (std::abs(x) > cfg.workspace_half_width ||
      std::abs(y) > cfg.workspace_half_width) {
    throw WorkspaceError("probe (" + std::to_string(x) + ", " +
                         std::to_string(y) + ") outside the +/-" +
                         std::to_string(cfg.workspace_half_width) +
                         " mm workspace");
  }
}

// Appends lateral move, contact motion and (on a miss) depart. Returns
// (descent start time, hole found).
std::pair<double, bool> AppendProbe(Timeline& tl, const EnvState& env,
                                    const Offset& xy, const TaskParams& p,
                                    const SimConfig& cfg) {
  CheckWorkspace(xy.dx, xy.dy, cfg);
  const Pose above{xy.dx, xy.dy, p.depart_height};
  tl.MoveLinear(above, p.v_lateral, p.accel);
  const double t_descent = tl.now();
  const double planned = p.depart_height + p.probe_depth;
  if (InCapture(env, xy.dx, xy.dy)) {
    tl.GuardedDescent(-p.probe_depth, planned, p.v_descent, p.accel);
    return {t_descent, true};
  }
  const double stop = p.depart_height + p.f_contact / env.surface_stiffness;
  if (stop >= planned) {
    // The force threshold is never reached: the contact motion completes
    // and the program reports success.
    tl.GuardedDescent(-p.probe_depth, planned, p.v_descent, p.accel);
    return {t_descent, true};
  }
  tl.GuardedDescent(-p.probe_depth, stop, p.v_descent, p.accel);
  tl.MoveLinear(above, p.v_descent, p.accel);
  return {t_descent, false};
}

std::size_t FirstIndexAtOrAfter(const std::vector<TrajectoryPoint>& pts,
                                double t) {
  auto it = std::lower_bound(
      pts.begin(), pts.end(), t - 1e-12,
      [](const TrajectoryPoint& p, double v) { return p.t < v; });
  return static_cast<std::size_t>(it - pts.begin());
}

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Uniform(std::mt19937_64& rng, double bound) {
  if (bound == 0.0) return 0.0;
  return std::uniform_real_distribution<double>(-bound, bound)(rng);
}

}  // namespace

void SimConfig::Validate() const {
  const double positive[] = {capture_radius, hole_depth,   stiffness,
                             sample_dt,      pixel_pitch,  marker_radius,
                             workspace_half_width};
  for (double v : positive) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("SimConfig: sizes and rates must be > 0");
    }
  }
  if (offset_bound < 0.0 || residual_bound < 0.0 || force_noise_sigma < 0.0 ||
      image_noise_sigma < 0.0) {
    throw InvalidArgument("SimConfig: bounds and noise levels must be >= 0");
  }
  if (image_height <= 0 || image_width <= 0) {
    throw InvalidArgument("SimConfig: image size must be positive");
  }
}

std::uint64_t StreamSeed(std::uint64_t seed, std::uint64_t stream) {
  return SplitMix64(SplitMix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

EnvState SampleEnvironment(std::uint64_t seed, const SimConfig& cfg) {
  std::mt19937_64 rng(StreamSeed(seed, 1));
  EnvState env;
  env.hx = Uniform(rng, cfg.offset_bound);
  env.hy = Uniform(rng, cfg.offset_bound);
  env.mx = env.hx + Uniform(rng, cfg.residual_bound);
  env.my = env.hy + Uniform(rng, cfg.residual_bound);
  env.capture_radius = cfg.capture_radius;
  env.hole_depth = cfg.hole_depth;
  env.surface_stiffness = cfg.stiffness;
  env.force_noise_sigma = cfg.force_noise_sigma;
  return env;
}

EnvImage RenderImage(const EnvState& env, const SimConfig& cfg,
                     std::uint64_t seed) {
  constexpr int kSuper = 4;
  std::mt19937_64 rng(StreamSeed(seed, 2));
  std::normal_distribution<double> noise(0.0, 1.0);
  EnvImage img;
  img.height = cfg.image_height;
  img.width = cfg.image_width;
  img.pixel_pitch = cfg.pixel_pitch;
  img.pixels.resize(static_cast<std::size_t>(img.height * img.width));
  const double cx = 0.5 * (img.width - 1);
  const double cy = 0.5 * (img.height - 1);
  const double r2 = cfg.marker_radius * cfg.marker_radius;
  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) {
      int inside = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double x =
              (col - cx + (sx + 0.5) / kSuper - 0.5) * cfg.pixel_pitch;
          const double y =
              (row - cy + (sy + 0.5) / kSuper - 0.5) * cfg.pixel_pitch;
          const double ddx = x - env.mx, ddy = y - env.my;
          if (ddx * ddx + ddy * ddy <= r2) ++inside;
        }
      }
      const double coverage = static_cast<double>(inside) / (kSuper * kSuper);
      double v = cfg.background_intensity +
                 (cfg.marker_intensity - cfg.background_intensity) * coverage;
      if (cfg.image_noise_sigma > 0.0) v += cfg.image_noise_sigma * noise(rng);
      img.pixels[static_cast<std::size_t>(row * img.width + col)] =
          static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return img;
}

bool InCapture(const EnvState& env, double x, double y) {
  const double dx = x - env.hx, dy = y - env.hy;
  return dx * dx + dy * dy <= env.capture_radius * env.capture_radius;
}

ProbeOutcome ExecuteProbe(const EnvState& env, const Offset& probe_xy,
                          const TaskParams& params, std::uint64_t seed,
                          const SimConfig& cfg) {
  return ExecuteProbe(env, probe_xy, params, seed, cfg,
                      {probe_xy.dx, probe_xy.dy, params.depart_height});
}

ProbeOutcome ExecuteProbe(const EnvState& env, const Offset& probe_xy,
                          const TaskParams& params, std::uint64_t seed,
                          const SimConfig& cfg, const Pose& from) {
  params.Validate();
  Timeline tl(from);
  ProbeOutcome out;
  out.hole_found = AppendProbe(tl, env, probe_xy, params, cfg).second;
  out.segment = Sample(tl, from, env, cfg.sample_dt, StreamSeed(seed, 3));
  return out;
}

ExecutionRecord ExecuteProgram(const EnvState& env, const TaskParams& params,
                               std::uint64_t seed, const SimConfig& cfg) {
  params.Validate();
  CheckWorkspace(params.point_to.x, params.point_to.y, cfg);
  Timeline tl(cfg.home);
  tl.MoveLinear(params.point_to, params.v_lateral, params.accel);
  std::vector<std::pair<double, double>> probe_times;
  bool found = false;
  for (std::size_t k = 0; k < params.pattern.size() && !found; ++k) {
    const auto [t_start, hit] =
        AppendProbe(tl, env, params.ProbePosition(k), params, cfg);
    probe_times.emplace_back(t_start, tl.now());
    found = hit;
  }
  ExecutionRecord rec;
  rec.seed = seed;
  rec.env = env;
  rec.params = params;
  rec.trajectory.points =
      Sample(tl, cfg.home, env, cfg.sample_dt, StreamSeed(seed, 3));
  rec.trajectory.success = found;
  const auto& pts = rec.trajectory.points;
  for (std::size_t k = 0; k < probe_times.size(); ++k) {
    const std::size_t s = FirstIndexAtOrAfter(pts, probe_times[k].first);
    const std::size_t e = k + 1 == probe_times.size()
                              ? pts.size()
                              : FirstIndexAtOrAfter(pts, probe_times[k].second);
    rec.trajectory.probe_boundaries.emplace_back(s, e);
  }
  return rec;
}

bool GeometricSuccess(const EnvState& env, const TaskParams& params) {
  for (std::size_t k = 0; k < params.pattern.size(); ++k) {
    const double x = params.point_to.x + params.pattern[k].dx;
    const double y = params.point_to.y + params.pattern[k].dy;
    if (std::hypot(x - env.hx, y - env.hy) <= env.capture_radius) return true;
  }
  return false;
}

}  // namespace probeopt::sim
