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
// Gradient-based program parameter optimization through a shadow program.
//
// Only point_to and the pattern offsets are free; dynamics stay at their
// given values. Every step clamps the parameters back into the domain, and
// the best iterate seen is returned.

#ifndef PROBEOPT_SPI_OPTIMIZER_H_
#define PROBEOPT_SPI_OPTIMIZER_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "probeopt/autodiff/tape.h"
#include "probeopt/core/types.h"
#include "probeopt/mutt/model.h"
#include "probeopt/simenv/simulator.h"

namespace probeopt::spi {

struct OptimizeOptions {
  int steps = 200;
  double learning_rate = 0.05;  // mm per step, before moment scaling
  double w_s = 1.0;             // weight of the all-probes-miss probability
  double w_c = 0.25;            // weight of the normalized expected time
  double adam_eps = 1e-12;

  void Validate() const;
};

struct ObjectiveTerms {
  ad::Var phi;
  ad::Var phi_s;  // probability that every probe misses
  ad::Var phi_c;  // expected end time over the full-pattern time
};

// p_probe and plan_times are K x 1 (conditional hit probabilities and
// cumulative cycle times c_k).
ObjectiveTerms Objective(ad::Var p_probe, ad::Var plan_times,
                         const OptimizeOptions& opts);

struct OptimizeResult {
  TaskParams best;
  double best_phi = 0.0;
  int best_step = 0;
  std::vector<double> trace;       // objective at every evaluated iterate
  std::vector<double> best_trace;  // running minimum of trace
};

// Throws NumericError (with the trace so far in the message) when the
// objective or its gradient becomes non-finite.
OptimizeResult Optimize(const TaskParams& x0, const sim::EnvImage& image,
                        const mutt::ShadowProgram& shadow,
                        const ParamDomain& domain,
                        const OptimizeOptions& opts = {});

// Objective value and gradient w.r.t. (point_to 1x3, pattern Kx2) at x.
struct ObjectiveGradient {
  double phi = 0.0;
  ad::Matrix d_point_to;
  ad::Matrix d_pattern;
};
ObjectiveGradient EvaluateObjective(const TaskParams& x,
                                    const sim::EnvImage& image,
                                    const mutt::ShadowProgram& shadow,
                                    const OptimizeOptions& opts);

// Before/after execution of one environment.
struct OptimizationRow {
  std::uint64_t env_seed = 0;
  double ct_before = 0.0, ct_after = 0.0;
  std::size_t probes_before = 0, probes_after = 0;
  bool success_before = false, success_after = false;
  double phi_final = 0.0;
};

struct OptimizationReport {
  OptimizationMetrics metrics;
  std::vector<OptimizationRow> rows;
};

// Builds the shadow program used for one environment. Learned models ignore
// the argument; oracle stubs read the hidden state from it.
using ShadowFactory =
    std::function<std::unique_ptr<mutt::ShadowProgram>(const sim::EnvState&)>;

struct EvaluateOptions {
  std::size_t n_envs = 100;
  std::uint64_t seed = 0;
  int pattern_size = 20;
  int threads = 1;
};

// Seed of evaluation environment i, disjoint from collection episodes.
std::uint64_t EvaluationSeed(std::uint64_t base, std::size_t i);

// For each environment: execute the baseline program, optimize its
// parameters on the image, execute the optimized parameters with fresh
// noise. Only TaskParams ever reach the simulator.
OptimizationReport EvaluateOptimization(const ShadowFactory& shadow,
                                        const sim::SimConfig& cfg,
                                        const ParamDomain& domain,
                                        const OptimizeOptions& opts,
                                        const EvaluateOptions& eval);

// csv: env_seed, ct_before, ct_after, probes_before, probes_after,
// success_before, success_after, phi_trace_final.
std::string OptimizationCsv(const OptimizationReport& r);

// "after (before)" markdown table.
std::string OptimizationMarkdown(const OptimizationMetrics& m);

}  // namespace probeopt::spi

#endif  // PROBEOPT_SPI_OPTIMIZER_H_
