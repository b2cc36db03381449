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
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "probeopt/core/errors.h"
#include "probeopt/core/program.h"
#include "probeopt/core/trajectory.h"
#include "probeopt/core/types.h"

namespace probeopt {
namespace {

Trajectory Ramp(std::size_t n, double dt, double x0 = 0.0) {
  Trajectory t;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i);
    t.points.push_back({s * dt, {x0 + 0.1 * s, -0.05 * s, 5.0 - 0.01 * s},
                        std::sin(0.3 * s)});
  }
  return t;
}

TEST(NominalGridPattern, TwentyProbesFormFiveByFourGrid) {
  const Pattern p = NominalGridPattern(20, 1.0);
  ASSERT_EQ(p.size(), 20u);
  EXPECT_EQ(p.front(), (Offset{-2.0, -1.5}));
  EXPECT_EQ(p.back(), (Offset{2.0, 1.5}));
}

TEST(NominalGridPattern, SinglePointAtOrigin) {
  EXPECT_EQ(NominalGridPattern(1, 1.0), (Pattern{{0.0, 0.0}}));
}

TEST(NominalGridPattern, FourPointsAreSymmetricSquare) {
  EXPECT_EQ(NominalGridPattern(4, 2.0),
            (Pattern{{-1, -1}, {1, -1}, {-1, 1}, {1, 1}}));
}

TEST(NominalGridPattern, CentroidIsOriginAndEvenGridsArePointSymmetric) {
  for (std::size_t k : {1u, 2u, 4u, 6u, 9u, 12u, 16u, 20u, 25u}) {
    const Pattern p = NominalGridPattern(k, 0.7);
    double sx = 0.0, sy = 0.0;
    for (const Offset& o : p) {
      sx += o.dx;
      sy += o.dy;
    }
    EXPECT_NEAR(sx, 0.0, 1e-12) << k;
    EXPECT_NEAR(sy, 0.0, 1e-12) << k;
    if (k % 2 == 0 && k > 1) {
      for (const Offset& o : p) {
        bool found = false;
        for (const Offset& q : p) {
          found |= std::abs(q.dx + o.dx) < 1e-12 && std::abs(q.dy + o.dy) < 1e-12;
        }
        EXPECT_TRUE(found) << k;
      }
    }
  }
}

TEST(ResampleTrajectory, LinearRampHalvesCleanly) {
  Trajectory t;
  t.points = {{0.0, {0, 0, 5.0}, 0.0}, {1.0, {0, 0, 0.0}, 0.0}};
  const Trajectory r = ResampleTrajectory(t, 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_DOUBLE_EQ(r.points[0].pose.z, 5.0);
  EXPECT_DOUBLE_EQ(r.points[1].pose.z, 2.5);
  EXPECT_DOUBLE_EQ(r.points[2].pose.z, 0.0);
}

TEST(ResampleTrajectory, UniformInputOfSameLengthIsUnchanged) {
  const Trajectory t = Ramp(57, 0.01);
  const Trajectory r = ResampleTrajectory(t, t.size());
  ASSERT_EQ(r.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(r.points[i].t, t.points[i].t, 1e-12);
    EXPECT_NEAR(r.points[i].pose.x, t.points[i].pose.x, 1e-12);
    EXPECT_NEAR(r.points[i].fz, t.points[i].fz, 1e-12);
  }
  const Trajectory rr = ResampleTrajectory(r, r.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(rr.points[i].pose.z, r.points[i].pose.z, 1e-12);
  }
}

TEST(ResampleTrajectory, SineWithinLinearInterpolationBound) {
  // |error| <= h^2 / 8 * max|f''| for linear interpolation of sin(w t).
  const double w = 2.0 * M_PI, dt = 1.0 / 99.0;
  Trajectory t;
  for (int i = 0; i < 100; ++i) {
    t.points.push_back({i * dt, {}, std::sin(w * i * dt)});
  }
  const Trajectory r = ResampleTrajectory(t, 50);
  const double bound = dt * dt / 8.0 * w * w;
  for (const auto& p : r.points) {
    EXPECT_LE(std::abs(p.fz - std::sin(w * p.t)), bound + 1e-12);
  }
}

TEST(TrajectoryMetrics, IdenticalTrajectoriesHaveZeroError) {
  const Trajectory t = Ramp(40, 0.01);
  const TrajectoryErrors e = TrajectoryMetrics(t, t);
  EXPECT_EQ(e.mae_L, 0.0);
  EXPECT_EQ(e.mae_P, 0.0);
  EXPECT_EQ(e.mae_F, 0.0);
}

TEST(TrajectoryMetrics, ConstantOffsetInX) {
  const Trajectory gt = Ramp(40, 0.01);
  Trajectory pred = gt;
  for (auto& p : pred.points) p.pose.x += 1.0;
  EXPECT_NEAR(TrajectoryMetrics(pred, gt).mae_P, 1.0, 1e-12);
}

TEST(TrajectoryMetrics, LengthDifferenceWithMatchingShape) {
  // Both sample the same straight line, so resampling loses nothing.
  auto line = [](std::size_t n) {
    Trajectory t;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(n - 1);
      t.points.push_back({u, {u, 2.0 * u, 3.0}, 1.5});
    }
    return t;
  };
  const TrajectoryErrors e = TrajectoryMetrics(line(180), line(201));
  EXPECT_EQ(e.mae_L, 21.0);
  EXPECT_NEAR(e.mae_P, 0.0, 1e-12);
  EXPECT_NEAR(e.mae_F, 0.0, 1e-12);
}

TEST(TrajectoryMetrics, PositionAndForceErrorsAreSymmetric) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Trajectory a = Ramp(30 + trial, 0.01), b = Ramp(45, 0.02, 0.3);
    for (auto& p : a.points) p.fz += u(rng);
    const TrajectoryErrors ab = TrajectoryMetrics(a, b);
    const TrajectoryErrors ba = TrajectoryMetrics(b, a);
    EXPECT_EQ(ab.mae_L, ba.mae_L);
    EXPECT_NEAR(ab.mae_P, ba.mae_P, 1e-12);
    EXPECT_NEAR(ab.mae_F, ba.mae_F, 1e-12);
  }
}

TEST(TimeAlignedMetrics, ComparesCommonPrefix) {
  const Trajectory gt = Ramp(50, 0.01);
  Trajectory pred = gt;
  pred.points.resize(30);
  const TrajectoryErrors e = TimeAlignedMetrics(pred, gt);
  EXPECT_EQ(e.mae_L, 20.0);
  EXPECT_EQ(e.mae_P, 0.0);
  EXPECT_EQ(e.mae_F, 0.0);
}

TEST(F1Score, HeldOutCountsExample) {
  EXPECT_NEAR(F1Score(159, 0, 2), 0.9937, 5e-5);
}

TEST(F1Score, PerfectAndAllPositiveClassifiers) {
  EXPECT_EQ(F1Score(10, 0, 0), 1.0);
  EXPECT_NEAR(F1Score(161, 38, 0), 322.0 / 360.0, 1e-12);
}

TEST(F1Score, UndefinedWithoutPositives) {
  EXPECT_THROW(F1Score(0, 0, 0), UndefinedMetric);
}

TEST(F1Score, MatchesBruteForceConfusionMatrix) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 60);
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision_num = 0, pred_pos = 0, actual_pos = 0;
    for (int i = 0; i < n; ++i) {
      const bool label = rng() % 2, pred = rng() % 3 != 0;
      tp += label && pred;
      fp += !label && pred;
      fn += label && !pred;
      precision_num += label && pred;
      pred_pos += pred;
      actual_pos += label;
    }
    if (tp + fp + fn == 0) continue;
    const double precision = pred_pos > 0 ? precision_num / pred_pos : 0.0;
    const double recall = actual_pos > 0 ? precision_num / actual_pos : 0.0;
    const double expected = precision + recall > 0
                                ? 2 * precision * recall / (precision + recall)
                                : 0.0;
    EXPECT_NEAR(F1Score(tp, fp, fn), expected, 1e-12);
  }
}

TEST(TaskParams, ValidateRejectsNonPositiveDynamics) {
  TaskParams p;
  p.pattern = NominalGridPattern(4, 1.0);
  EXPECT_NO_THROW(p.Validate());
  p.accel = 0.0;
  EXPECT_THROW(p.Validate(), InvalidArgument);
  p.accel = 500.0;
  p.pattern[1].dx = NAN;
  EXPECT_THROW(p.Validate(), InvalidArgument);
}

TEST(ParamDomain, ProjectClampsAndIsIdempotent) {
  ParamDomain d;
  TaskParams p;
  p.point_to = {3.0, -7.0, 9.0};
  p.pattern = {{5.0, -0.5}, {-3.0, 2.5}};
  const TaskParams once = d.Project(p);
  EXPECT_TRUE(d.Contains(once));
  EXPECT_EQ(once.point_to, (Pose{2.0, -2.0, 5.0}));
  EXPECT_EQ(once.pattern[0], (Offset{2.0, -0.5}));
  EXPECT_EQ(once.pattern[1], (Offset{-2.0, 2.0}));
  const TaskParams twice = d.Project(once);
  EXPECT_EQ(twice.point_to, once.point_to);
  EXPECT_EQ(twice.pattern, once.pattern);
}

TEST(ParamDomain, ValidateRejectsInvertedRange) {
  ParamDomain d;
  d.pattern_dx = {1.0, -1.0};
  EXPECT_THROW(d.Validate(), InvalidArgument);
}

TEST(Program, RequiresExactlyOneSearch) {
  EXPECT_THROW(Program({LinearMotion{}}), InvalidArgument);
  EXPECT_THROW(Program({ProbeSearch{}, ProbeSearch{}}), InvalidArgument);
  EXPECT_NO_THROW(Program({LinearMotion{}, ProbeSearch{}}));
}

TEST(Program, JsonRoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  TaskParams p;
  p.point_to = {u(rng), u(rng), 5.0};
  for (int i = 0; i < 20; ++i) p.pattern.push_back({u(rng), u(rng)});
  p.v_lateral = 1.0 / 3.0;
  p.f_contact = 0.1 + 0.2;
  const Program prog({LinearMotion{{0.1, 0.2, 30.0}, 40.0, 400.0}, ContactMotion{},
                      ProbeSearch{p}});
  const Program back =
      ProgramFromJson(nlohmann::json::parse(ToJson(prog).dump()));
  const TaskParams& q = back.search_params();
  EXPECT_EQ(q.point_to, p.point_to);
  EXPECT_EQ(q.pattern, p.pattern);
  EXPECT_EQ(q.v_lateral, p.v_lateral);
  EXPECT_EQ(q.f_contact, p.f_contact);
  ASSERT_EQ(back.skills().size(), 3u);
  EXPECT_EQ(std::get<LinearMotion>(back.skills()[0]).target,
            (Pose{0.1, 0.2, 30.0}));
}

TEST(Program, UsesSnakeCaseFieldNames) {
  TaskParams p;
  p.pattern = {{0.5, 0.25}};
  const nlohmann::json j = ToJson(Program::ForSearch(p));
  const auto& params = j.at("skills").at(0).at("params");
  EXPECT_EQ(j.at("skills").at(0).at("kind"), "ProbeSearch");
  for (const char* key : {"point_to", "pattern", "v_lateral", "v_descent",
                          "accel", "f_contact", "probe_depth",
                          "depart_height"}) {
    EXPECT_TRUE(params.contains(key)) << key;
  }
}

}  // namespace
}  // namespace probeopt
