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
#include <type_traits>

#include <gtest/gtest.h>

#include "probeopt/core/errors.h"
#include "probeopt/core/program.h"
#include "probeopt/core/trajectory.h"
#include "probeopt/mutt/model.h"
#include "probeopt/simenv/simulator.h"
#include "probeopt/spi/optimizer.h"
#include "probeopt/training/dataset.h"

namespace probeopt::spi {
namespace {

using ad::Matrix;
using ad::Tape;

// The simulator accepts program parameters only; predicted outcomes have no
// path into execution.
static_assert(std::is_invocable_v<decltype(&sim::ExecuteProgram),
                                  const sim::EnvState&, const TaskParams&,
                                  std::uint64_t, const sim::SimConfig&>);
static_assert(!std::is_invocable_v<decltype(&sim::ExecuteProgram),
                                   const sim::EnvState&, const Trajectory&,
                                   std::uint64_t, const sim::SimConfig&>);
static_assert(!std::is_invocable_v<decltype(&sim::ExecuteProgram),
                                   const sim::EnvState&,
                                   const mutt::SearchPrediction&,
                                   std::uint64_t, const sim::SimConfig&>);
static_assert(!std::is_convertible_v<Trajectory, TaskParams>);
static_assert(!std::is_convertible_v<mutt::SearchPrediction, TaskParams>);

// Straight-line evaluation of the objective.
double ReferencePhi(const std::vector<double>& p, const std::vector<double>& c,
                    double w_s, double w_c) {
  double survive = 1.0;
  double expected = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    expected += p[k] * survive * c[k];
    survive *= 1.0 - p[k];
  }
  expected += survive * c.back();
  return w_s * survive + w_c * expected / c.back();
}

ObjectiveTerms Eval(Tape& t, const std::vector<double>& p,
                    const std::vector<double>& c, const OptimizeOptions& o) {
  Matrix pm(static_cast<Eigen::Index>(p.size()), 1);
  Matrix cm(static_cast<Eigen::Index>(c.size()), 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    pm(static_cast<Eigen::Index>(k), 0) = p[k];
    cm(static_cast<Eigen::Index>(k), 0) = c[k];
  }
  return Objective(t.Constant(pm), t.Constant(cm), o);
}

TEST(Objective, AllMissIsBothWeights) {
  Tape t;
  OptimizeOptions o;
  const ObjectiveTerms r = Eval(t, {0.0, 0.0, 0.0}, {1.0, 2.0, 3.5}, o);
  EXPECT_DOUBLE_EQ(r.phi.scalar(), o.w_s + o.w_c);
  EXPECT_DOUBLE_EQ(r.phi_s.scalar(), 1.0);
  EXPECT_DOUBLE_EQ(r.phi_c.scalar(), 1.0);
}

TEST(Objective, CertainFirstHitIsFirstTimeFraction) {
  Tape t;
  OptimizeOptions o;
  const ObjectiveTerms r = Eval(t, {1.0, 0.3, 0.7}, {1.2, 2.0, 4.0}, o);
  EXPECT_DOUBLE_EQ(r.phi.scalar(), o.w_c * 1.2 / 4.0);
  EXPECT_EQ(r.phi_s.scalar(), 0.0);
}

TEST(Objective, MatchesReferenceAndDecomposes) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 20;
    std::vector<double> p(k), c(k);
    double t = 0.0;
    for (int i = 0; i < k; ++i) {
      p[i] = u(gen);
      t += 0.1 + u(gen);
      c[i] = t;
    }
    OptimizeOptions o;
    o.w_s = 0.1 + u(gen);
    o.w_c = u(gen);
    Tape tape;
    const ObjectiveTerms r = Eval(tape, p, c, o);
    EXPECT_NEAR(r.phi.scalar(), ReferencePhi(p, c, o.w_s, o.w_c), 1e-12);
    EXPECT_NEAR(r.phi.scalar() - o.w_s * r.phi_s.scalar() -
                    o.w_c * r.phi_c.scalar(),
                0.0, 1e-15);
    EXPECT_GE(r.phi_s.scalar(), 0.0);
    EXPECT_LE(r.phi_s.scalar(), 1.0);
    EXPECT_GE(r.phi_c.scalar(), 0.0);
    EXPECT_LE(r.phi_c.scalar(), 1.0 + 1e-15);
  }
}

TEST(Objective, ShapeMismatchThrows) {
  Tape t;
  EXPECT_THROW(Objective(t.Constant(Matrix::Zero(3, 1)),
                         t.Constant(Matrix::Ones(2, 1)), OptimizeOptions{}),
               ShapeError);
}

TEST(OptimizeOptions, Validation) {
  OptimizeOptions o;
  EXPECT_NO_THROW(o.Validate());
  o.steps = 0;
  EXPECT_THROW(o.Validate(), InvalidArgument);
  o = {};
  o.learning_rate = 0.0;
  EXPECT_THROW(o.Validate(), InvalidArgument);
}

struct Scene {
  sim::EnvState env;
  sim::EnvImage image;
  TaskParams x0;
};

Scene MakeScene(std::uint64_t seed, int k = 9) {
  const sim::SimConfig cfg;
  Scene s;
  s.env = sim::SampleEnvironment(seed, cfg);
  s.image = sim::RenderImage(s.env, cfg, seed);
  s.x0 = train::BaselineParams(ParamDomain{}, k, seed);
  return s;
}

mutt::ShadowConfig Shadow() { return mutt::ShadowConfigFor(sim::SimConfig{}); }

TEST(Projection, IdempotentAndInDomain) {
  const ParamDomain d;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    TaskParams p;
    p.point_to = {u(gen), u(gen), 5.0 + u(gen)};
    for (int i = 0; i < 6; ++i) p.pattern.push_back({u(gen), u(gen)});
    const TaskParams once = d.Project(p);
    EXPECT_TRUE(d.Contains(once));
    EXPECT_EQ(ToJson(d.Project(once)), ToJson(once));
  }
}

TEST(Optimize, TraceBookkeepingAndDomain) {
  const Scene s = MakeScene(11);
  const mutt::OracleShadowProgram shadow(s.env, Shadow());
  OptimizeOptions o;
  o.steps = 30;
  const OptimizeResult r = Optimize(s.x0, s.image, shadow, ParamDomain{}, o);
  ASSERT_EQ(r.trace.size(), 31u);
  ASSERT_EQ(r.best_trace.size(), 31u);
  for (std::size_t i = 1; i < r.best_trace.size(); ++i) {
    EXPECT_LE(r.best_trace[i], r.best_trace[i - 1]);
  }
  EXPECT_EQ(r.best_phi, r.best_trace.back());
  EXPECT_EQ(r.best_phi, r.trace[static_cast<std::size_t>(r.best_step)]);
  EXPECT_LT(r.best_phi, r.trace.front());
  EXPECT_TRUE(ParamDomain{}.Contains(r.best));
  // Dynamics are not free variables.
  EXPECT_EQ(r.best.v_lateral, s.x0.v_lateral);
  EXPECT_EQ(r.best.f_contact, s.x0.f_contact);
  EXPECT_EQ(r.best.point_to.z, s.x0.point_to.z);
  EXPECT_EQ(r.best.pattern.size(), s.x0.pattern.size());
}

TEST(Optimize, RejectsOutOfDomainStart) {
  Scene s = MakeScene(2);
  s.x0.point_to.x = 1e3;
  const mutt::OracleShadowProgram shadow(s.env, Shadow());
  EXPECT_THROW(Optimize(s.x0, s.image, shadow, ParamDomain{}), InvalidArgument);
}

TEST(Optimize, SuccessOnlyObjectiveMovesProbeTowardHole) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    Scene s = MakeScene(seed, 1);
    s.x0.point_to.x = 0.0;
    s.x0.point_to.y = 0.0;
    s.x0.pattern = {{s.env.hx + (s.env.hx > 0.0 ? -1.2 : 1.2),
                     s.env.hy + (s.env.hy > 0.0 ? -0.8 : 0.8)}};
    ASSERT_TRUE(ParamDomain{}.Contains(s.x0));
    const mutt::OracleShadowProgram shadow(s.env, Shadow());
    OptimizeOptions o;
    o.w_c = 0.0;
    o.steps = 10;
    const OptimizeResult r = Optimize(s.x0, s.image, shadow, ParamDomain{}, o);
    const auto dist = [&](const TaskParams& p) {
      const Offset xy = p.ProbePosition(0);
      return std::hypot(xy.dx - s.env.hx, xy.dy - s.env.hy);
    };
    EXPECT_LT(dist(r.best), dist(s.x0) - 0.1) << seed;
    EXPECT_EQ(r.best_step, 10) << seed;
  }
}

TEST(Optimize, IteratesInvariantToCommonWeightScale) {
  const Scene s = MakeScene(21);
  const mutt::OracleShadowProgram shadow(s.env, Shadow());
  OptimizeOptions a;
  a.steps = 25;
  OptimizeOptions b = a;
  b.w_s *= 10.0;
  b.w_c *= 10.0;
  const OptimizeResult ra = Optimize(s.x0, s.image, shadow, ParamDomain{}, a);
  const OptimizeResult rb = Optimize(s.x0, s.image, shadow, ParamDomain{}, b);
  // Scaling by 10 is inexact in binary, so iterates agree to rounding.
  const double tol = 1e-7;
  EXPECT_EQ(ra.best_step, rb.best_step);
  for (std::size_t i = 0; i < ra.trace.size(); ++i) {
    EXPECT_NEAR(rb.trace[i], 10.0 * ra.trace[i], tol * rb.trace[i]);
  }
  EXPECT_NEAR(ra.best.point_to.x, rb.best.point_to.x, tol);
  EXPECT_NEAR(ra.best.point_to.y, rb.best.point_to.y, tol);
  for (std::size_t k = 0; k < ra.best.pattern.size(); ++k) {
    EXPECT_NEAR(ra.best.pattern[k].dx, rb.best.pattern[k].dx, tol);
    EXPECT_NEAR(ra.best.pattern[k].dy, rb.best.pattern[k].dy, tol);
  }
}

TEST(Optimize, Deterministic) {
  const Scene s = MakeScene(8);
  const mutt::OracleShadowProgram shadow(s.env, Shadow());
  OptimizeOptions o;
  o.steps = 15;
  const OptimizeResult a = Optimize(s.x0, s.image, shadow, ParamDomain{}, o);
  const OptimizeResult b = Optimize(s.x0, s.image, shadow, ParamDomain{}, o);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(ToJson(a.best), ToJson(b.best));
}

TEST(EvaluateObjective, GradientMatchesFiniteDifferences) {
  const Scene s = MakeScene(5, 4);
  const mutt::OracleShadowProgram shadow(s.env, Shadow());
  const OptimizeOptions o;
  const ObjectiveGradient g = EvaluateObjective(s.x0, s.image, shadow, o);
  const double h = 1e-6;
  for (std::size_t k = 0; k < s.x0.pattern.size(); ++k) {
    TaskParams up = s.x0, dn = s.x0;
    up.pattern[k].dx += h;
    dn.pattern[k].dx -= h;
    const double fd = (EvaluateObjective(up, s.image, shadow, o).phi -
                       EvaluateObjective(dn, s.image, shadow, o).phi) /
                      (2.0 * h);
    const double a = g.d_pattern(static_cast<Eigen::Index>(k), 0);
    EXPECT_LE(std::abs(a - fd) / std::max(1.0, std::abs(a)), 1e-4);
  }
}

ShadowFactory OracleFactory() {
  return [](const sim::EnvState& env) {
    return std::make_unique<mutt::OracleShadowProgram>(env, Shadow());
  };
}

TEST(EvaluateOptimization, OracleReachesUpperBound) {
  EvaluateOptions e;
  e.n_envs = 20;
  e.seed = 3;
  const OptimizationReport r = EvaluateOptimization(
      OracleFactory(), sim::SimConfig{}, ParamDomain{}, OptimizeOptions{}, e);
  EXPECT_EQ(r.metrics.sr_after, 1.0);
  EXPECT_EQ(r.metrics.probes_after, 1.0);
  EXPECT_LT(r.metrics.ct_after, r.metrics.ct_before);
}

// Wraps a shadow program and records every prediction it hands out.
class SpyShadow : public mutt::ShadowProgram {
 public:
  SpyShadow(const sim::EnvState& env, std::vector<double>* seen)
      : inner_(env, Shadow()), seen_(seen) {}
  mutt::ShadowOutputs Forward(Tape& tape, ad::Var point_to, ad::Var pattern,
                              const TaskParams& params,
                              const sim::EnvImage& image) const override {
    mutt::ShadowOutputs out =
        inner_.Forward(tape, point_to, pattern, params, image);
    seen_->push_back(out.expected_length.scalar());
    return out;
  }
  const mutt::ShadowConfig& config() const override { return inner_.config(); }

 private:
  mutt::OracleShadowProgram inner_;
  std::vector<double>* seen_;
};

TEST(EvaluateOptimization, AfterMetricsComeFromReexecutedParameters) {
  const sim::SimConfig cfg;
  std::vector<double> seen;
  EvaluateOptions e;
  e.n_envs = 4;
  e.seed = 17;
  OptimizeOptions o;
  o.steps = 20;
  const OptimizationReport r = EvaluateOptimization(
      [&](const sim::EnvState& env) {
        return std::make_unique<SpyShadow>(env, &seen);
      },
      cfg, ParamDomain{}, o, e);
  EXPECT_EQ(seen.size(), 4u * 21u);
  for (std::size_t i = 0; i < 4; ++i) {
    const std::uint64_t s = EvaluationSeed(17, i);
    const sim::EnvState env = sim::SampleEnvironment(s, cfg);
    const mutt::OracleShadowProgram shadow(env, Shadow());
    const OptimizeResult opt =
        Optimize(train::BaselineParams(ParamDomain{}, 20, s),
                 sim::RenderImage(env, cfg, s), shadow, ParamDomain{}, o);
    const sim::ExecutionRecord rerun =
        sim::ExecuteProgram(env, opt.best, sim::StreamSeed(s, 5), cfg);
    EXPECT_EQ(r.rows[i].env_seed, s);
    EXPECT_EQ(r.rows[i].ct_after, rerun.cycle_time());
    EXPECT_EQ(r.rows[i].probes_after, rerun.probe_count());
    EXPECT_EQ(r.rows[i].success_after, rerun.trajectory.success);
  }
}

TEST(EvaluateOptimization, UntrainedModelDoesNotRegress) {
  mutt::ModelWeights w = mutt::InitWeights(mutt::ModelConfig{}, 1);
  const train::Dataset ds =
      train::CollectDataset(sim::SimConfig{}, ParamDomain{}, 100, 1);
  w.norm = ds.meta.stats;
  EvaluateOptions e;
  e.n_envs = 40;
  e.seed = 9;
  OptimizeOptions o;
  o.steps = 40;
  const OptimizationReport r = EvaluateOptimization(
      [&](const sim::EnvState&) {
        return std::make_unique<mutt::MuttShadowProgram>(w, Shadow());
      },
      sim::SimConfig{}, ParamDomain{}, o, e);
  // Paired difference on 40 environments; three binomial standard errors.
  const double se = 3.0 * std::sqrt(0.25 / 40.0);
  EXPECT_GE(r.metrics.sr_after, r.metrics.sr_before - se);
  EXPECT_LE(r.metrics.probes_after, r.metrics.probes_before * 1.5 + 1.0);
}

TEST(EvaluateOptimization, DeterministicAndThreadIndependent) {
  EvaluateOptions e;
  e.n_envs = 6;
  OptimizeOptions o;
  o.steps = 10;
  const auto a = EvaluateOptimization(OracleFactory(), sim::SimConfig{},
                                      ParamDomain{}, o, e);
  e.threads = 3;
  const auto b = EvaluateOptimization(OracleFactory(), sim::SimConfig{},
                                      ParamDomain{}, o, e);
  EXPECT_EQ(OptimizationCsv(a), OptimizationCsv(b));
  EXPECT_THROW(EvaluateOptimization(OracleFactory(), sim::SimConfig{},
                                    ParamDomain{}, o, EvaluateOptions{0}),
               InvalidArgument);
}

TEST(Reports, CsvAndMarkdownLayout) {
  OptimizationReport r;
  r.rows.push_back({7, 9.5, 3.25, 8, 2, false, true, 0.125});
  r.metrics = {9.5, 3.25, 8.0, 2.0, 0.0, 1.0};
  EXPECT_EQ(OptimizationCsv(r),
            "env_seed,ct_before,ct_after,probes_before,probes_after,"
            "success_before,success_after,phi_trace_final\n"
            "7,9.500000,3.250000,8,2,0,1,0.125\n");
  const std::string md = OptimizationMarkdown(r.metrics);
  EXPECT_NE(md.find("| CT [s] | 3.25 (9.50) |"), std::string::npos) << md;
  EXPECT_NE(md.find("| # probes | 2.00 (8.00) |"), std::string::npos);
  EXPECT_NE(md.find("| SR [%] | 100.0 (0.0) |"), std::string::npos);
}

}  // namespace
}  // namespace probeopt::spi
