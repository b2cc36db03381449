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

#include "probeopt/autodiff/gradcheck.h"
#include "probeopt/autodiff/ops.h"
#include "probeopt/core/trajectory.h"
#include "probeopt/planner/planner.h"
#include "probeopt/simenv/simulator.h"

namespace probeopt::planner {
namespace {

using ad::Matrix;
using ad::Tape;
using ad::Var;

Matrix Row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

Matrix PatternMatrix(const Pattern& p) {
  Matrix m(static_cast<Eigen::Index>(p.size()), 2);
  for (std::size_t k = 0; k < p.size(); ++k) {
    m(static_cast<Eigen::Index>(k), 0) = p[k].dx;
    m(static_cast<Eigen::Index>(k), 1) = p[k].dy;
  }
  return m;
}

TEST(SegmentDuration, TrapezoidClosedForm) {
  EXPECT_NEAR(SegmentDuration(5.0, 20.0, 500.0), 5.0 / 20.0 + 20.0 / 500.0,
              1e-15);
}

TEST(SegmentDuration, TriangleClosedForm) {
  EXPECT_NEAR(SegmentDuration(0.4, 20.0, 500.0), 2.0 * std::sqrt(0.4 / 500.0),
              1e-15);
}

TEST(SegmentDuration, ZeroDistanceHasZeroTimeAndGradient) {
  Tape t;
  Var a = t.Variable(Row({1.0, 2.0, 3.0}));
  Var b = t.Variable(Row({1.0, 2.0, 3.0}));
  Var d = SegmentDuration(a, b, 20.0, 500.0);
  t.Backward(d);
  EXPECT_EQ(d.scalar(), 0.0);
  EXPECT_TRUE(t.Grad(a).isZero());
  EXPECT_TRUE(t.Grad(b).isZero());
}

TEST(SegmentDuration, TapeMatchesScalarVersion) {
  Tape t;
  Var d = SegmentDuration(t.Constant(Row({0, 0, 0})),
                          t.Constant(Row({3.0, 4.0, 0.0})), 20.0, 500.0);
  EXPECT_NEAR(d.scalar(), SegmentDuration(5.0, 20.0, 500.0), 1e-15);
}

TEST(SegmentDuration, GradientsMatchFiniteDifferences) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0), vel(5.0, 80.0),
      acc(100.0, 900.0), scale(-3.0, 1.5);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double s = std::pow(10.0, scale(gen));
    Matrix x(1, 6);
    for (int i = 0; i < 6; ++i) x(0, i) = s * u(gen);
    if ((x.leftCols(3) - x.rightCols(3)).norm() < 1e-3) continue;
    const double v = vel(gen), a = acc(gen);
    const ad::GradCheckResult r = ad::FiniteDifferenceCheck(
        [&](Tape&, Var p) {
          return SegmentDuration(ad::Slice(p, 0, 1, 0, 3),
                                 ad::Slice(p, 0, 1, 3, 3), v, a);
        },
        x, 1e-7);
    worst = std::max(worst, r.max_rel_error);
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(TimeToReach, FullDistanceEqualsSegmentDuration) {
  EXPECT_NEAR(TimeToReach(11.0, 11.0, 20.0, 500.0),
              SegmentDuration(11.0, 20.0, 500.0), 1e-12);
  EXPECT_EQ(TimeToReach(11.0, 0.0, 20.0, 500.0), 0.0);
}

TEST(PlanLinear, EndpointsAndMonotoneTimes) {
  Tape t;
  Var from = t.Variable(Row({1.0, -1.0, 5.0}));
  Var to = t.Variable(Row({-2.0, 3.0, 5.0}));
  const PlannedSegment s = PlanLinear(from, to, 50.0, 500.0, 11);
  const Matrix& w = s.waypoints.value();
  ASSERT_EQ(w.rows(), 11);
  EXPECT_EQ(w(0, 0), 0.0);
  EXPECT_NEAR(w(10, 0), s.duration.scalar(), 1e-15);
  EXPECT_TRUE(w.row(0).tail(3).isApprox(from.value(), 1e-15));
  EXPECT_TRUE(w.row(10).tail(3).isApprox(to.value(), 1e-15));
  for (int i = 1; i < 11; ++i) EXPECT_GT(w(i, 0), w(i - 1, 0));
  // Symmetric profile: the midpoint in time is the geometric midpoint.
  const Matrix mid = 0.5 * (from.value() + to.value());
  EXPECT_TRUE(w.row(5).tail(3).isApprox(mid, 1e-12));
}

TEST(PlanLinear, FinalWaypointAttachedToTarget) {
  for (int coord = 0; coord < 3; ++coord) {
    Tape t;
    Var from = t.Variable(Row({1.0, -1.0, 5.0}));
    Var to = t.Variable(Row({-2.0, 3.0, 4.0}));
    const PlannedSegment s = PlanLinear(from, to, 50.0, 500.0, 6);
    t.Backward(ad::Slice(s.waypoints, 5, 1, 1 + coord, 1));
    Matrix e = Matrix::Zero(1, 3);
    e(0, coord) = 1.0;
    EXPECT_TRUE(t.Grad(to).isApprox(e, 1e-12)) << t.Grad(to);
    EXPECT_LT(t.Grad(from).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PlanLinear, WaypointGradientsMatchFiniteDifferences) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x(1, 6);
    for (int i = 0; i < 6; ++i) x(0, i) = u(gen);
    Matrix w(7, 4);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(gen);
    const ad::GradCheckResult r = ad::FiniteDifferenceCheck(
        [&](Tape& t, Var p) {
          const PlannedSegment s = PlanLinear(ad::Slice(p, 0, 1, 0, 3),
                                              ad::Slice(p, 0, 1, 3, 3), 40.0,
                                              400.0, 7);
          return ad::Sum(s.waypoints * t.Constant(w));
        },
        x, 1e-6);
    EXPECT_LE(r.max_rel_error, 1e-6);
  }
}

TaskParams Defaults(Pattern pattern) {
  TaskParams p;
  p.point_to = {0.3, -0.2, 5.0};
  p.pattern = std::move(pattern);
  return p;
}

TEST(ComposeSearchPlan, SingleProbeAtPointTo) {
  const TaskParams p = Defaults({{0.0, 0.0}});
  const Pose home{0.0, 0.0, 25.0};
  const std::vector<double> c = NominalCycleTimes(home, p);
  const double approach =
      SegmentDuration(Distance(home, p.point_to), p.v_lateral, p.accel);
  const double depth = p.f_contact / PlannerConfig{}.nominal_stiffness;
  const double descent = TimeToReach(p.depart_height + p.probe_depth,
                                     p.depart_height + depth, p.v_descent,
                                     p.accel);
  const double depart =
      SegmentDuration(p.depart_height + depth, p.v_descent, p.accel);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0], approach + descent + depart, 1e-12);
}

TEST(ComposeSearchPlan, CountsPlannerCalls) {
  Tape t;
  const TaskParams p = Defaults(NominalGridPattern(20, 1.0));
  const SearchPlan plan = ComposeSearchPlan(
      {0, 0, 25}, t.Constant(Row({0.3, -0.2, 5.0})),
      t.Constant(PatternMatrix(p.pattern)), p);
  EXPECT_EQ(plan.planner_calls, 61);
  EXPECT_EQ(plan.cumulative.rows(), 20);
}

TEST(ComposeSearchPlan, CumulativeTimesStrictlyIncrease) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Pattern pat;
    for (int k = 0; k < 20; ++k) pat.push_back({u(gen), u(gen)});
    const std::vector<double> c =
        NominalCycleTimes({0, 0, 25}, Defaults(pat));
    for (std::size_t k = 1; k < c.size(); ++k) EXPECT_GT(c[k], c[k - 1]);
  }
}

TEST(ComposeSearchPlan, MovingProbeFartherDelaysLaterProbes) {
  Pattern pat = NominalGridPattern(6, 0.5);
  const std::vector<double> before =
      NominalCycleTimes({0, 0, 25}, Defaults(pat));
  pat[2].dx += 1.0;  // farther from probe 1
  pat[2].dy -= 1.0;
  const std::vector<double> after =
      NominalCycleTimes({0, 0, 25}, Defaults(pat));
  EXPECT_EQ(after[0], before[0]);
  EXPECT_EQ(after[1], before[1]);
  for (int k = 2; k < 6; ++k) EXPECT_GT(after[k], before[k]) << k;
}

TEST(ComposeSearchPlan, MatchesNoiselessSimulatorMissTiming) {
  sim::SimConfig cfg;
  sim::EnvState env;
  env.hx = env.mx = 9.0;  // no probe can reach it
  env.hy = env.my = 9.0;
  env.force_noise_sigma = 0.0;
  const TaskParams p = Defaults(NominalGridPattern(20, 1.0));
  const sim::ExecutionRecord rec = sim::ExecuteProgram(env, p, 1, cfg);
  ASSERT_FALSE(rec.trajectory.success);
  const std::vector<double> c = NominalCycleTimes(cfg.home, p);
  EXPECT_NEAR(rec.cycle_time(), c.back(), 2.0 * cfg.sample_dt * 20);
}

TEST(ComposeSearchPlan, CycleTimeGradientsMatchFiniteDifferences) {
  const TaskParams p = Defaults(NominalGridPattern(9, 0.9));
  Matrix x(1, 3 + 18);
  x(0, 0) = 0.3;
  x(0, 1) = -0.2;
  x(0, 2) = 5.0;
  for (int k = 0; k < 9; ++k) {
    x(0, 3 + 2 * k) = p.pattern[k].dx;
    x(0, 4 + 2 * k) = p.pattern[k].dy;
  }
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (Eigen::Index i = 3; i < x.cols(); ++i) x(0, i) += u(gen);
  const Matrix w = Eigen::VectorXd::LinSpaced(9, 0.1, 1.0);
  const ad::GradCheckResult r = ad::FiniteDifferenceCheck(
      [&](Tape& t, Var v) {
        std::vector<Var> rows;
        for (int k = 0; k < 9; ++k) rows.push_back(ad::Slice(v, 0, 1, 3 + 2 * k, 2));
        const SearchPlan plan = ComposeSearchPlan(
            {0, 0, 25}, ad::Slice(v, 0, 1, 0, 3), ad::Concat(rows, 0), p);
        return ad::Sum(plan.cumulative * t.Constant(w));
      },
      x, 1e-6);
  EXPECT_LE(r.max_rel_error, 1e-6);
}

}  // namespace
}  // namespace probeopt::planner
