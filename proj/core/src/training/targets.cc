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
#include "probeopt/training/targets.h"

#include <algorithm>
#include <cmath>

#include "probeopt/core/errors.h"
#include "probeopt/core/trajectory.h"

namespace probeopt::train {
namespace {

// Running mean / standard deviation (Welford).
class Moments {
 public:
  void Add(double v) {
    ++n_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (v - mean_);
  }
  double mean() const { return mean_; }
  // Falls back to 1 for (near) constant channels.
  double scale() const {
    if (n_ < 2) return 1.0;
    const double s = std::sqrt(m2_ / static_cast<double>(n_));
    return s > 1e-6 ? s : 1.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace

ProbeTargets ExtractProbeTargets(const sim::ExecutionRecord& rec,
                                 int profile_len) {
  if (profile_len < 2) throw InvalidArgument("profile_len must be >= 2");
  const auto& pts = rec.trajectory.points;
  const auto& bounds = rec.trajectory.probe_boundaries;
  const auto n = static_cast<Eigen::Index>(bounds.size());
  ProbeTargets out;
  out.context = mutt::ProbeContext(rec.params).topRows(n);
  out.targets.resize(n, 2 * profile_len + 2);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::size_t s = bounds[k].first;
    std::size_t e = k + 1 < n ? bounds[k].second : pts.size() - 1;
    e = std::min(e, pts.size() - 1);
    if (s >= pts.size() || e < s) {
      throw InvalidArgument("record " + std::to_string(rec.seed) +
                            " has inconsistent probe boundaries");
    }
    Trajectory slice;
    slice.points.assign(pts.begin() + s, pts.begin() + e + 1);
    const Trajectory prof = ResampleTrajectory(
        slice, static_cast<std::size_t>(profile_len));
    double depth = slice.points.front().pose.z;
    for (const auto& p : slice.points) depth = std::min(depth, p.pose.z);
    for (int i = 0; i < profile_len; ++i) {
      out.targets(k, i) = prof.points[i].pose.z;
      out.targets(k, profile_len + i) = prof.points[i].fz;
    }
    out.targets(k, 2 * profile_len) = pts[e].t - pts[s].t;
    out.targets(k, 2 * profile_len + 1) = depth;
  }
  return out;
}

std::vector<mutt::ProbePrediction> TargetsAsPredictions(
    const ProbeTargets& t) {
  const Eigen::Index len = (t.targets.cols() - 2) / 2;
  std::vector<mutt::ProbePrediction> out(t.targets.rows());
  for (Eigen::Index k = 0; k < t.targets.rows(); ++k) {
    auto& p = out[k];
    for (Eigen::Index i = 0; i < len; ++i) {
      p.z.push_back(t.targets(k, i));
      p.fz.push_back(t.targets(k, len + i));
    }
    p.duration = t.targets(k, 2 * len);
    p.contact_depth = t.targets(k, 2 * len + 1);
  }
  return out;
}

std::vector<int> ProbeLabels(const sim::ExecutionRecord& rec) {
  std::vector<int> y(rec.trajectory.probe_boundaries.size(), 0);
  if (rec.trajectory.success && !y.empty()) y.back() = 1;
  return y;
}

mutt::Normalization ComputeStats(
    const std::vector<sim::ExecutionRecord>& train, int profile_len) {
  if (train.empty()) throw InvalidArgument("statistics need training records");
  Moments pixel, z, fz, dur, depth;
  std::vector<Moments> ctx(mutt::kContextDim);
  std::size_t probes = 0;
  for (const auto& rec : train) {
    for (float v : rec.image.pixels) pixel.Add(v);
    const ProbeTargets t = ExtractProbeTargets(rec, profile_len);
    probes += static_cast<std::size_t>(t.targets.rows());
    for (Eigen::Index k = 0; k < t.targets.rows(); ++k) {
      for (int c = 0; c < mutt::kContextDim; ++c) ctx[c].Add(t.context(k, c));
      for (int i = 0; i < profile_len; ++i) {
        z.Add(t.targets(k, i));
        fz.Add(t.targets(k, profile_len + i));
      }
      dur.Add(t.targets(k, 2 * profile_len));
      depth.Add(t.targets(k, 2 * profile_len + 1));
    }
  }
  if (probes == 0) throw InvalidArgument("training records contain no probes");
  mutt::Normalization n;
  n.pixel_mean = pixel.mean();
  n.pixel_scale = pixel.scale();
  for (int c = 0; c < mutt::kContextDim; ++c) {
    n.context_mean(c) = ctx[c].mean();
    n.context_scale(c) = ctx[c].scale();
  }
  n.z_mean = z.mean();
  n.z_scale = z.scale();
  n.fz_mean = fz.mean();
  n.fz_scale = fz.scale();
  n.duration_mean = dur.mean();
  n.duration_scale = dur.scale();
  n.depth_mean = depth.mean();
  n.depth_scale = depth.scale();
  return n;
}

ad::Matrix NormalizeTargets(const ad::Matrix& raw,
                            const mutt::Normalization& n) {
  const Eigen::Index len = (raw.cols() - 2) / 2;
  ad::Matrix out(raw.rows(), raw.cols());
  out.leftCols(len) = (raw.leftCols(len).array() - n.z_mean) / n.z_scale;
  out.middleCols(len, len) =
      (raw.middleCols(len, len).array() - n.fz_mean) / n.fz_scale;
  out.col(2 * len) =
      (raw.col(2 * len).array() - n.duration_mean) / n.duration_scale;
  out.col(2 * len + 1) =
      (raw.col(2 * len + 1).array() - n.depth_mean) / n.depth_scale;
  return out;
}

}  // namespace probeopt::train
