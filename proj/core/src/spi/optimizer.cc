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
#include "probeopt/spi/optimizer.h"

#include <cmath>
#include <cstdio>

#include "probeopt/autodiff/adam.h"
#include "probeopt/autodiff/ops.h"
#include "probeopt/core/errors.h"
#include "probeopt/core/parallel.h"
#include "probeopt/training/dataset.h"

namespace probeopt::spi {
namespace {

using ad::Matrix;
using ad::Var;

Matrix PointTo(const TaskParams& x) {
  Matrix m(1, 3);
  m << x.point_to.x, x.point_to.y, x.point_to.z;
  return m;
}

Matrix PatternMatrix(const TaskParams& x) {
  Matrix m(static_cast<Eigen::Index>(x.pattern.size()), 2);
  for (std::size_t i = 0; i < x.pattern.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = x.pattern[i].dx;
    m(static_cast<Eigen::Index>(i), 1) = x.pattern[i].dy;
  }
  return m;
}

TaskParams WithFree(const TaskParams& base, const Matrix& pt,
                    const Matrix& pat) {
  TaskParams x = base;
  x.point_to = {pt(0, 0), pt(0, 1), pt(0, 2)};
  for (std::size_t i = 0; i < x.pattern.size(); ++i) {
    x.pattern[i] = {pat(static_cast<Eigen::Index>(i), 0),
                    pat(static_cast<Eigen::Index>(i), 1)};
  }
  return x;
}

std::string TraceText(const std::vector<double>& trace) {
  std::string s;
  char buf[32];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.6g", i ? " " : "", trace[i]);
    s += buf;
  }
  return s;
}

}  // namespace

void OptimizeOptions::Validate() const {
  if (steps < 1 || !(learning_rate > 0.0) || w_s < 0.0 || w_c < 0.0 ||
      adam_eps < 0.0) {
    throw InvalidArgument("optimize: steps >= 1, rate > 0 and non-negative "
                          "weights required");
  }
}

ObjectiveTerms Objective(Var p_probe, Var plan_times,
                         const OptimizeOptions& opts) {
  if (plan_times.rows() != p_probe.rows() || plan_times.cols() != 1) {
    throw ShapeError("objective: plan times must be K x 1 like p_probe");
  }
  const mutt::SurvivalChain chain = mutt::Aggregate(p_probe);
  const Eigen::Index k = p_probe.rows();
  const Var full = ad::Slice(plan_times, k - 1, 1, 0, 1);
  ObjectiveTerms t;
  t.phi_s = chain.q_fail;
  t.phi_c = mutt::ExpectOverTermination(chain, plan_times) / full;
  t.phi = t.phi_s * opts.w_s + t.phi_c * opts.w_c;
  return t;
}

ObjectiveGradient EvaluateObjective(const TaskParams& x,
                                    const sim::EnvImage& image,
                                    const mutt::ShadowProgram& shadow,
                                    const OptimizeOptions& opts) {
  ad::Tape tape;
  Var pt = tape.Variable(PointTo(x));
  Var pat = tape.Variable(PatternMatrix(x));
  const mutt::ShadowOutputs out = shadow.Forward(tape, pt, pat, x, image);
  const ObjectiveTerms terms =
      Objective(out.p_probe, out.plan.cumulative, opts);
  tape.Backward(terms.phi);
  return {terms.phi.scalar(), tape.Grad(pt), tape.Grad(pat)};
}

OptimizeResult Optimize(const TaskParams& x0, const sim::EnvImage& image,
                        const mutt::ShadowProgram& shadow,
                        const ParamDomain& domain,
                        const OptimizeOptions& opts) {
  opts.Validate();
  x0.Validate();
  if (x0.pattern.empty()) throw InvalidArgument("optimize: empty pattern");
  if (!domain.Contains(x0)) {
    throw InvalidArgument("optimize: initial parameters outside the domain");
  }
  Matrix pt = PointTo(x0);
  Matrix pat = PatternMatrix(x0);
  ad::Adam adam({0.9, 0.999, opts.adam_eps});
  OptimizeResult r;
  r.best = x0;
  for (int step = 0; step <= opts.steps; ++step) {
    const TaskParams x = WithFree(x0, pt, pat);
    const ObjectiveGradient g = EvaluateObjective(x, image, shadow, opts);
    if (!std::isfinite(g.phi) || !g.d_point_to.allFinite() ||
        !g.d_pattern.allFinite()) {
      throw NumericError("optimize: non-finite objective or gradient at step " +
                         std::to_string(step) + "; trace: " +
                         TraceText(r.trace));
    }
    r.trace.push_back(g.phi);
    if (step == 0 || g.phi < r.best_phi) {
      r.best_phi = g.phi;
      r.best_step = step;
      r.best = x;
    }
    r.best_trace.push_back(r.best_phi);
    if (step == opts.steps) break;
    adam.Step({&pt, &pat}, {&g.d_point_to, &g.d_pattern}, opts.learning_rate);
    const TaskParams projected = domain.Project(WithFree(x0, pt, pat));
    pt = PointTo(projected);
    pat = PatternMatrix(projected);
  }
  return r;
}

std::uint64_t EvaluationSeed(std::uint64_t base, std::size_t i) {
  return sim::StreamSeed(base, 0x40000000ULL + static_cast<std::uint64_t>(i));
}

OptimizationReport EvaluateOptimization(const ShadowFactory& shadow,
                                        const sim::SimConfig& cfg,
                                        const ParamDomain& domain,
                                        const OptimizeOptions& opts,
                                        const EvaluateOptions& eval) {
  if (eval.n_envs < 1) throw InvalidArgument("evaluate: n_envs must be >= 1");
  opts.Validate();
  OptimizationReport rep;
  rep.rows.resize(eval.n_envs);
  ParallelFor(eval.n_envs, eval.threads, [&](std::size_t i) {
    const std::uint64_t s = EvaluationSeed(eval.seed, i);
    const sim::EnvState env = sim::SampleEnvironment(s, cfg);
    const sim::EnvImage image = sim::RenderImage(env, cfg, s);
    const TaskParams x0 = train::BaselineParams(domain, eval.pattern_size, s);
    const sim::ExecutionRecord before = sim::ExecuteProgram(env, x0, s, cfg);
    const auto program = shadow(env);
    const OptimizeResult opt = Optimize(x0, image, *program, domain, opts);
    // Re-execution: the optimized parameters run through the simulator.
    const sim::ExecutionRecord after =
        sim::ExecuteProgram(env, opt.best, sim::StreamSeed(s, 5), cfg);
    OptimizationRow& row = rep.rows[i];
    row.env_seed = s;
    row.ct_before = before.cycle_time();
    row.ct_after = after.cycle_time();
    row.probes_before = before.probe_count();
    row.probes_after = after.probe_count();
    row.success_before = before.trajectory.success;
    row.success_after = after.trajectory.success;
    row.phi_final = opt.best_trace.back();
  });
  OptimizationMetrics& m = rep.metrics;
  for (const auto& row : rep.rows) {
    m.ct_before += row.ct_before;
    m.ct_after += row.ct_after;
    m.probes_before += static_cast<double>(row.probes_before);
    m.probes_after += static_cast<double>(row.probes_after);
    m.sr_before += row.success_before ? 1.0 : 0.0;
    m.sr_after += row.success_after ? 1.0 : 0.0;
  }
  const auto n = static_cast<double>(rep.rows.size());
  m.ct_before /= n;
  m.ct_after /= n;
  m.probes_before /= n;
  m.probes_after /= n;
  m.sr_before /= n;
  m.sr_after /= n;
  return rep;
}

std::string OptimizationCsv(const OptimizationReport& r) {
  std::string out =
      "env_seed,ct_before,ct_after,probes_before,probes_after,"
      "success_before,success_after,phi_trace_final\n";
  char buf[256];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof(buf), "%llu,%.6f,%.6f,%zu,%zu,%d,%d,%.9g\n",
                  static_cast<unsigned long long>(row.env_seed), row.ct_before,
                  row.ct_after, row.probes_before, row.probes_after,
                  row.success_before ? 1 : 0, row.success_after ? 1 : 0,
                  row.phi_final);
    out += buf;
  }
  return out;
}

std::string OptimizationMarkdown(const OptimizationMetrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "| metric | after (before) |\n"
                "|---|---|\n"
                "| CT [s] | %.2f (%.2f) |\n"
                "| # probes | %.2f (%.2f) |\n"
                "| SR [%%] | %.1f (%.1f) |\n",
                m.ct_after, m.ct_before, m.probes_after, m.probes_before,
                100.0 * m.sr_after, 100.0 * m.sr_before);
  return buf;
}

}  // namespace probeopt::spi
