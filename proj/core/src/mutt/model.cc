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
#include "probeopt/mutt/model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "probeopt/autodiff/ops.h"
#include "probeopt/core/errors.h"

namespace probeopt::mutt {
namespace {

using ad::Matrix;
using ad::Var;

constexpr double kMasked = -1e9;

Var Linear(ParamBinder& w, const std::string& p, Var x) {
  return ad::AddRow(ad::MatMul(x, w(p + ".w")), w(p + ".b"));
}

Var Norm(ParamBinder& w, const std::string& p, Var x) {
  return ad::LayerNorm(x, w(p + ".g"), w(p + ".b"));
}

// (x - mean) / scale, row-wise.
Var Standardize(Var x, const Eigen::RowVectorXd& mean,
                const Eigen::RowVectorXd& scale) {
  ad::Tape& tape = *x.tape();
  Var centered = ad::AddRow(x, tape.Constant(-mean));
  const Matrix inv = scale.cwiseInverse().replicate(x.rows(), 1);
  return ad::Mul(centered, tape.Constant(inv));
}

// Pre-norm attention + feed-forward block. Queries attend over the image
// tokens and, with `causal_self`, over queries up to their own row.
Var Block(ParamBinder& w, const ModelConfig& arch, int layer, Var h, Var mem,
          bool causal_self) {
  const std::string p = "l" + std::to_string(layer) + ".";
  ad::Tape& tape = w.tape();
  const Eigen::Index n = h.rows();
  Var hq = Norm(w, p + "ln_q", h);
  Var keys = Norm(w, p + "ln_m", mem);
  if (causal_self) {
    const Var parts[] = {keys, hq};
    keys = ad::Concat(parts, 0);
  }
  const Eigen::Index m = keys.rows();
  Var q = ad::MatMul(hq, w(p + "wq"));
  Var k = ad::MatMul(keys, w(p + "wk"));
  Var v = ad::MatMul(keys, w(p + "wv"));
  const int dh = arch.d_model / arch.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Var mask;
  if (causal_self) {
    Matrix mk = Matrix::Zero(n, m);
    const Eigen::Index t = m - n;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) mk(i, t + j) = kMasked;
    }
    mask = tape.Constant(std::move(mk));
  }
  std::vector<Var> heads;
  heads.reserve(arch.heads);
  for (int hd = 0; hd < arch.heads; ++hd) {
    Var qh = ad::Slice(q, 0, n, hd * dh, dh);
    Var kh = ad::Slice(k, 0, m, hd * dh, dh);
    Var vh = ad::Slice(v, 0, m, hd * dh, dh);
    Var s = ad::MatMul(qh, ad::Transpose(kh)) * scale;
    if (causal_self) s = s + mask;
    heads.push_back(ad::MatMul(ad::Softmax(s, 1), vh));
  }
  Var att = ad::Concat(heads, 1);
  h = h + ad::AddRow(ad::MatMul(att, w(p + "wo")), w(p + "bo"));
  Var f = Norm(w, p + "ln_f", h);
  f = Linear(w, p + "ff2", ad::Gelu(Linear(w, p + "ff1", f)));
  return h + f;
}

Var Trunk(ParamBinder& w, const ModelConfig& arch, Var h, Var tokens,
          bool causal_self) {
  for (int l = 0; l < arch.layers; ++l) {
    h = Block(w, arch, l, h, tokens, causal_self);
  }
  return Linear(w, "out", Norm(w, "out.ln", h));
}

void RequireFinite(Var x, const char* what) {
  if (!x.value().allFinite()) {
    throw NumericError(std::string(what) + " contains non-finite values");
  }
}

// Distance covered at time t on a rest-to-rest move over d.
double ProfileDistance(double t, double d, double v, double a) {
  const double T = planner::SegmentDuration(d, v, a);
  if (T <= 0.0 || t <= 0.0) return 0.0;
  if (t >= T) return d;
  const bool trapezoid = d >= v * v / a;
  const double ramp = trapezoid ? v / a : 0.5 * T;
  if (t <= ramp) return 0.5 * a * t * t;
  if (trapezoid && t <= T - ramp) return v * t - v * v / (2.0 * a);
  return d - 0.5 * a * (T - t) * (T - t);
}

// Appends a straight move sampled every dt (and at its end) starting at
// the time of the last waypoint.
void AppendMove(std::vector<TrajectoryPoint>& pts, const Pose& to, double v,
                double a, double dt) {
  const TrajectoryPoint start = pts.back();
  const double dx = to.x - start.pose.x, dy = to.y - start.pose.y,
               dz = to.z - start.pose.z;
  const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
  const double T = planner::SegmentDuration(d, v, a);
  if (T <= 0.0) return;
  const int n = static_cast<int>(std::ceil(T / dt));
  for (int i = 1; i <= n; ++i) {
    const double t = std::min(T, i * dt);
    const double s = ProfileDistance(t, d, v, a) / d;
    TrajectoryPoint p;
    p.t = start.t + t;
    p.pose = {start.pose.x + s * dx, start.pose.y + s * dy,
              start.pose.z + s * dz};
    p.fz = 0.0;
    pts.push_back(p);
  }
}

// Samples piecewise-linear waypoints at t = i * dt plus the exact end time,
// matching the simulator's clock.
std::vector<TrajectoryPoint> OnClock(const std::vector<TrajectoryPoint>& wp,
                                     double dt) {
  const double end = wp.back().t;
  const auto n = static_cast<std::size_t>(std::floor(end / dt + 1e-9)) + 1;
  std::vector<TrajectoryPoint> out;
  out.reserve(n + 1);
  std::size_t j = 0;
  auto at = [&](double t) {
    while (j + 1 < wp.size() && wp[j + 1].t < t) ++j;
    if (j + 1 >= wp.size()) {
      TrajectoryPoint p = wp.back();
      p.t = t;
      return p;
    }
    const TrajectoryPoint& a = wp[j];
    const TrajectoryPoint& b = wp[j + 1];
    const double span = b.t - a.t;
    const double s = span > 0.0 ? std::clamp((t - a.t) / span, 0.0, 1.0) : 1.0;
    TrajectoryPoint p;
    p.t = t;
    p.pose = {a.pose.x + s * (b.pose.x - a.pose.x),
              a.pose.y + s * (b.pose.y - a.pose.y),
              a.pose.z + s * (b.pose.z - a.pose.z)};
    p.fz = a.fz + s * (b.fz - a.fz);
    return p;
  };
  for (std::size_t i = 0; i < n; ++i) out.push_back(at(i * dt));
  if (end - out.back().t > 1e-9) out.push_back(at(end));
  return out;
}

}  // namespace

std::vector<ProbePrediction> ProbeOutputs::Values() const {
  const Eigen::Index n = duration.rows();
  const Eigen::Index len = z.cols();
  std::vector<ProbePrediction> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i].z.resize(len);
    out[i].fz.resize(len);
    for (Eigen::Index j = 0; j < len; ++j) {
      out[i].z[j] = z.value()(i, j);
      out[i].fz[j] = fz.value()(i, j);
    }
    out[i].duration = duration.value()(i, 0);
    out[i].contact_depth = contact_depth.value()(i, 0);
  }
  return out;
}

Var EncodeImage(ParamBinder& w, const ModelConfig& arch,
                const Normalization& norm, const sim::EnvImage& image) {
  if (image.height != arch.image_height || image.width != arch.image_width ||
      image.pixels.size() !=
          static_cast<std::size_t>(image.height) * image.width) {
    throw ShapeError("image is " + std::to_string(image.height) + "x" +
                     std::to_string(image.width) + ", model expects " +
                     std::to_string(arch.image_height) + "x" +
                     std::to_string(arch.image_width));
  }
  const int ps = arch.patch_size;
  const int pc = arch.image_width / ps;
  Matrix patches(arch.tokens(), ps * ps);
  const double inv = 1.0 / norm.pixel_scale;
  for (int t = 0; t < arch.tokens(); ++t) {
    const int r0 = (t / pc) * ps, c0 = (t % pc) * ps;
    for (int i = 0; i < ps; ++i) {
      for (int j = 0; j < ps; ++j) {
        patches(t, i * ps + j) =
            (static_cast<double>(image.at(r0 + i, c0 + j)) - norm.pixel_mean) *
            inv;
      }
    }
  }
  Var x = w.tape().Constant(std::move(patches));
  Var tok = ad::AddRow(ad::MatMul(x, w("enc.patch_w")), w("enc.patch_b"));
  return tok + w("enc.pos");
}

ProbeOutputs ProbeForward(ParamBinder& w, const ModelConfig& arch,
                          const Normalization& norm, Var image_tokens,
                          Var context) {
  if (context.cols() != kContextDim) {
    throw ShapeError("probe context must have " + std::to_string(kContextDim) +
                     " columns");
  }
  RequireFinite(context, "probe context");
  Var h = Linear(w, "in", Standardize(context, norm.context_mean,
                                      norm.context_scale));
  ProbeOutputs out;
  out.normalized = Trunk(w, arch, h, image_tokens, false);
  const Eigen::Index n = context.rows();
  const int len = arch.profile_len;
  out.z = ad::Slice(out.normalized, 0, n, 0, len) * norm.z_scale + norm.z_mean;
  out.fz = ad::Slice(out.normalized, 0, n, len, len) * norm.fz_scale +
           norm.fz_mean;
  out.duration = ad::Slice(out.normalized, 0, n, 2 * len, 1) *
                     norm.duration_scale +
                 norm.duration_mean;
  out.contact_depth = ad::Slice(out.normalized, 0, n, 2 * len + 1, 1) *
                          norm.depth_scale +
                      norm.depth_mean;
  return out;
}

Var ProbeContext(Var point_to, Var pattern, const TaskParams& params) {
  ad::Tape& tape = *pattern.tape();
  const Eigen::Index k = pattern.rows();
  if (pattern.cols() != 2 || point_to.rows() != 1 || point_to.cols() != 3) {
    throw ShapeError("probe context: point_to must be 1x3, pattern Kx2");
  }
  Var center = ad::Slice(point_to, 0, 1, 0, 2);
  Var xy = ad::AddRow(pattern, center);
  Var rep = ad::MatMul(tape.Constant(Matrix::Ones(k, 1)), center);
  Matrix dyn(k, 3);
  dyn.col(0).setConstant(params.v_descent);
  dyn.col(1).setConstant(params.accel);
  dyn.col(2).setConstant(params.f_contact);
  const Var parts[] = {xy, rep, tape.Constant(std::move(dyn))};
  return ad::Concat(parts, 1);
}

Matrix ProbeContext(const TaskParams& params) {
  const auto k = static_cast<Eigen::Index>(params.pattern.size());
  Matrix c(k, kContextDim);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Offset xy = params.ProbePosition(static_cast<std::size_t>(i));
    c.row(i) << xy.dx, xy.dy, params.point_to.x, params.point_to.y,
        params.v_descent, params.accel, params.f_contact;
  }
  return c;
}

Var SearchFeatures(Var point_to, Var pattern, const ProbeOutputs& probes) {
  const Eigen::Index k = pattern.rows();
  if (probes.duration.rows() != k) {
    throw ShapeError("search features: one probe prediction per pattern entry");
  }
  Var xy = ad::AddRow(pattern, ad::Slice(point_to, 0, 1, 0, 2));
  const double inv = 1.0 / static_cast<double>(probes.z.cols());
  const Var parts[] = {xy,
                       pattern,
                       probes.duration,
                       probes.contact_depth,
                       ad::Sum(probes.z, 1) * inv,
                       ad::Sum(probes.fz, 1) * inv};
  return ad::Concat(parts, 1);
}

Matrix SearchFeatures(const TaskParams& params,
                      const std::vector<ProbePrediction>& probes) {
  if (probes.size() != params.pattern.size()) {
    throw ShapeError("search features: one probe prediction per pattern entry");
  }
  Matrix f(static_cast<Eigen::Index>(probes.size()), kFeatureDim);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Offset xy = params.ProbePosition(i);
    const ProbePrediction& p = probes[i];
    // Summed left to right like Sum(axis) so both paths agree bit-exactly.
    double sz = 0.0, sf = 0.0;
    for (double v : p.z) sz += v;
    for (double v : p.fz) sf += v;
    const double inv = 1.0 / static_cast<double>(p.z.size());
    f.row(static_cast<Eigen::Index>(i)) << xy.dx, xy.dy, params.pattern[i].dx,
        params.pattern[i].dy, p.duration, p.contact_depth, sz * inv, sf * inv;
  }
  return f;
}

Var SearchForward(ParamBinder& w, const ModelConfig& arch,
                  const Normalization& norm, Var image_tokens, Var features) {
  const Eigen::Index k = features.rows();
  if (features.cols() != kFeatureDim) {
    throw ShapeError("search features must have " +
                     std::to_string(kFeatureDim) + " columns");
  }
  if (k < 1 || k > arch.max_probes) {
    throw ShapeError("pattern has " + std::to_string(k) +
                     " probes, model supports 1.." +
                     std::to_string(arch.max_probes));
  }
  RequireFinite(features, "search features");
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  Var h = Linear(w, "in", Standardize(features, norm.feature_mean,
                                      norm.feature_scale)) +
          ad::EmbedLookup(w("index_emb"), idx);
  return Trunk(w, arch, h, image_tokens, true);
}

SurvivalChain Aggregate(Var p_probe) {
  if (p_probe.cols() != 1 || p_probe.rows() < 1) {
    throw ShapeError("per-probe probabilities must be K x 1");
  }
  ad::Tape& tape = *p_probe.tape();
  SurvivalChain c;
  Var alive = tape.Scalar(1.0);
  for (Eigen::Index k = 0; k < p_probe.rows(); ++k) {
    Var pk = ad::Slice(p_probe, k, 1, 0, 1);
    c.q.push_back(pk * alive);
    alive = alive * (1.0 - pk);
  }
  c.q_fail = alive;
  c.p_success = 1.0 - alive;
  return c;
}

Var ExpectOverTermination(const SurvivalChain& chain, Var values) {
  const auto k = static_cast<Eigen::Index>(chain.q.size());
  if (values.rows() != k || values.cols() != 1) {
    throw ShapeError("termination values must be K x 1");
  }
  Var acc = chain.q_fail * ad::Slice(values, k - 1, 1, 0, 1);
  for (Eigen::Index i = 0; i < k; ++i) {
    acc = acc + chain.q[i] * ad::Slice(values, i, 1, 0, 1);
  }
  return acc;
}

ShadowConfig ShadowConfigFor(const sim::SimConfig& cfg) {
  ShadowConfig s;
  s.home = cfg.home;
  s.sample_dt = cfg.sample_dt;
  s.planner.nominal_stiffness = cfg.stiffness;
  return s;
}

Var LengthsFromTimes(Var cumulative_time, double sample_dt) {
  return cumulative_time * (1.0 / sample_dt) + 1.0;
}

MuttShadowProgram::MuttShadowProgram(const ModelWeights& weights,
                                     ShadowConfig cfg)
    : weights_(weights), cfg_(cfg) {
  CheckWeights(weights_);
}

ShadowOutputs MuttShadowProgram::Forward(ad::Tape& tape, Var point_to,
                                         Var pattern, const TaskParams& params,
                                         const sim::EnvImage& image) const {
  const ModelConfig& arch = weights_.arch;
  const Eigen::Index k = pattern.rows();
  if (k < 1 || k > arch.max_probes) {
    throw ShapeError("pattern has " + std::to_string(k) +
                     " probes, model supports 1.." +
                     std::to_string(arch.max_probes));
  }
  ShadowOutputs out;
  out.plan = planner::ComposeSearchPlan(cfg_.home, point_to, pattern, params,
                                        cfg_.planner);
  ParamBinder probe_w(tape, weights_.probe, false);
  ParamBinder search_w(tape, weights_.search, false);
  Var tok_probe = EncodeImage(probe_w, arch, weights_.norm, image);
  out.probes = ProbeForward(probe_w, arch, weights_.norm, tok_probe,
                            ProbeContext(point_to, pattern, params));
  out.probe_inferences = static_cast<int>(k);
  Var tok_search = EncodeImage(search_w, arch, weights_.norm, image);
  Var logits = SearchForward(search_w, arch, weights_.norm, tok_search,
                             SearchFeatures(point_to, pattern, out.probes));
  out.search_inferences = 1;
  out.p_probe = ad::Sigmoid(logits);

  std::vector<Var> times;
  Var t = out.plan.approach;
  for (Eigen::Index i = 0; i < k; ++i) {
    t = t + out.plan.lateral[i] + ad::Slice(out.probes.duration, i, 1, 0, 1);
    times.push_back(t);
  }
  out.lengths = LengthsFromTimes(ad::Concat(times, 0), cfg_.sample_dt);
  out.chain = Aggregate(out.p_probe);
  out.expected_length = ExpectOverTermination(out.chain, out.lengths);
  return out;
}

ShadowOutputs OracleShadowProgram::Forward(ad::Tape& tape, Var point_to,
                                           Var pattern,
                                           const TaskParams& params,
                                           const sim::EnvImage&) const {
  ShadowOutputs out;
  out.plan = planner::ComposeSearchPlan(cfg_.home, point_to, pattern, params,
                                        cfg_.planner);
  Var xy = ad::AddRow(pattern, ad::Slice(point_to, 0, 1, 0, 2));
  Matrix hole(1, 2);
  hole << -env_.hx, -env_.hy;
  Var d2 = ad::Sum(ad::Square(ad::AddRow(xy, tape.Constant(hole))), 1);
  const double r2 = env_.capture_radius * env_.capture_radius;
  Var ratio2 = d2 * (1.0 / r2);
  out.p_probe = ad::Div(tape.Scalar(1.0), 1.0 + ad::Square(ratio2));
  out.lengths = LengthsFromTimes(out.plan.cumulative, cfg_.sample_dt);
  out.chain = Aggregate(out.p_probe);
  out.expected_length = ExpectOverTermination(out.chain, out.lengths);
  return out;
}

int TerminatingProbe(const std::vector<double>& q, double q_fail) {
  if (q.empty()) throw InvalidArgument("empty termination distribution");
  const auto best = std::max_element(q.begin(), q.end());
  if (q_fail > *best) return static_cast<int>(q.size()) - 1;
  return static_cast<int>(best - q.begin());
}

Trajectory AssembleTrajectory(const TaskParams& params,
                              const std::vector<ProbePrediction>& probes,
                              int last_probe, bool success,
                              const ShadowConfig& cfg) {
  if (probes.size() != params.pattern.size() || last_probe < 0 ||
      static_cast<std::size_t>(last_probe) >= probes.size()) {
    throw ShapeError("assemble: probe predictions do not match the pattern");
  }
  std::vector<TrajectoryPoint> wp;
  wp.push_back({0.0, cfg.home, 0.0});
  AppendMove(wp, params.point_to, params.v_lateral, params.accel,
             cfg.sample_dt);
  for (int k = 0; k <= last_probe; ++k) {
    const Offset xy = params.ProbePosition(static_cast<std::size_t>(k));
    AppendMove(wp, {xy.dx, xy.dy, params.depart_height}, params.v_lateral,
               params.accel, cfg.sample_dt);
    const ProbePrediction& p = probes[static_cast<std::size_t>(k)];
    const double t0 = wp.back().t;
    const double dur = std::max(p.duration, 0.0);
    const std::size_t n = p.z.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double s = n > 1 ? static_cast<double>(i) / (n - 1) : 1.0;
      wp.push_back({t0 + s * dur, {xy.dx, xy.dy, p.z[i]}, p.fz[i]});
    }
    // The next lateral move starts from depart height like the real program.
    if (k < last_probe) {
      wp.push_back({wp.back().t, {xy.dx, xy.dy, params.depart_height}, 0.0});
    }
  }
  Trajectory traj;
  traj.points = OnClock(wp, cfg.sample_dt);
  traj.success = success;
  return traj;
}

SearchPrediction PredictSearch(const MuttShadowProgram& shadow,
                               const TaskParams& params,
                               const sim::EnvImage& image) {
  params.Validate();
  ad::Tape tape;
  Matrix pt(1, 3);
  pt << params.point_to.x, params.point_to.y, params.point_to.z;
  Matrix pat(static_cast<Eigen::Index>(params.pattern.size()), 2);
  for (std::size_t i = 0; i < params.pattern.size(); ++i) {
    pat(static_cast<Eigen::Index>(i), 0) = params.pattern[i].dx;
    pat(static_cast<Eigen::Index>(i), 1) = params.pattern[i].dy;
  }
  ShadowOutputs o =
      shadow.Forward(tape, tape.Constant(pt), tape.Constant(pat), params, image);
  SearchPrediction out;
  const Matrix& p = o.p_probe.value();
  out.p_probe.assign(p.data(), p.data() + p.size());
  for (const Var& q : o.chain.q) out.q.push_back(q.scalar());
  out.q_fail = o.chain.q_fail.scalar();
  out.p_success = o.chain.p_success.scalar();
  out.expected_length = o.expected_length.scalar();
  out.probes = o.probes.Values();
  out.terminating_probe = TerminatingProbe(out.q, out.q_fail);
  out.trajectory =
      AssembleTrajectory(params, out.probes, out.terminating_probe,
                         out.p_success >= 0.5, shadow.config());
  return out;
}

}  // namespace probeopt::mutt
