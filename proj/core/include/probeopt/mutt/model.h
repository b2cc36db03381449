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
// Probe-level and search-level transformer predictors and their
// composition with the planner into a differentiable stand-in for a
// program execution.
//
// Both models use the same trunk: the image is cut into square patches,
// each projected to d_model and offset by a learned position embedding.
// A stream of query tokens (one per probe) then runs through pre-norm
// blocks of multi-head attention over the image tokens followed by a GELU
// feed-forward layer. The search model additionally lets probe k attend to
// probes 1..k (causal), so its per-probe output is conditioned on earlier
// misses.

#ifndef PROBEOPT_MUTT_MODEL_H_
#define PROBEOPT_MUTT_MODEL_H_

#include <vector>

#include "probeopt/autodiff/tape.h"
#include "probeopt/core/types.h"
#include "probeopt/mutt/weights.h"
#include "probeopt/planner/planner.h"
#include "probeopt/simenv/simulator.h"

namespace probeopt::mutt {

struct ProbePrediction {
  std::vector<double> z;   // profile heights, mm
  std::vector<double> fz;  // profile forces, N
  double duration = 0.0;   // s, descent start to the end of the probe
  double contact_depth = 0.0;  // mm, lowest z
};

// Tape outputs of the probe model for n probes.
struct ProbeOutputs {
  ad::Var normalized;     // n x (2P + 2), training target space
  ad::Var z;              // n x P
  ad::Var fz;             // n x P
  ad::Var duration;       // n x 1
  ad::Var contact_depth;  // n x 1

  std::vector<ProbePrediction> Values() const;
};

// Patch tokens (tokens x d_model). Throws ShapeError on a size mismatch.
ad::Var EncodeImage(ParamBinder& w, const ModelConfig& arch,
                    const Normalization& norm, const sim::EnvImage& image);

// Raw probe context rows (n x kContextDim, see weights.h) to predictions.
// Throws NumericError on non-finite context values.
ProbeOutputs ProbeForward(ParamBinder& w, const ModelConfig& arch,
                          const Normalization& norm, ad::Var image_tokens,
                          ad::Var context);

// Builds the context rows for every pattern entry of `params` from tape
// nodes for point_to (1x3) and the offsets (Kx2).
ad::Var ProbeContext(ad::Var point_to, ad::Var pattern,
                     const TaskParams& params);
ad::Matrix ProbeContext(const TaskParams& params);

// Search-token features (K x kFeatureDim) from the offsets and the probe
// model's outputs for every pattern entry.
ad::Var SearchFeatures(ad::Var point_to, ad::Var pattern,
                       const ProbeOutputs& probes);
ad::Matrix SearchFeatures(const TaskParams& params,
                          const std::vector<ProbePrediction>& probes);

// Per-probe hole-found logits (K x 1) from raw features.
ad::Var SearchForward(ParamBinder& w, const ModelConfig& arch,
                      const Normalization& norm, ad::Var image_tokens,
                      ad::Var features);

// Exact aggregation of conditional per-probe hit probabilities.
struct SurvivalChain {
  std::vector<ad::Var> q;   // probability that probe k ends the search
  ad::Var q_fail;           // all probes miss
  ad::Var p_success;        // 1 - q_fail
};
SurvivalChain Aggregate(ad::Var p_probe);
// sum_k q_k v_k + q_fail v_K for a K x 1 value column.
ad::Var ExpectOverTermination(const SurvivalChain& chain, ad::Var values);

struct ShadowConfig {
  Pose home{0.0, 0.0, 25.0};
  double sample_dt = 0.01;
  planner::PlannerConfig planner;
};
ShadowConfig ShadowConfigFor(const sim::SimConfig& cfg);

// Differentiable outputs of one shadow-program pass.
struct ShadowOutputs {
  ad::Var p_probe;          // K x 1
  SurvivalChain chain;
  ad::Var expected_length;  // points
  ad::Var lengths;          // K x 1, cumulative points through probe k
  planner::SearchPlan plan;
  ProbeOutputs probes;      // unset for stubs without a probe model
  int probe_inferences = 0;
  int search_inferences = 0;
};

// Maps (point_to, pattern) tape nodes plus frozen program settings and the
// image to search outcome predictions. Implementations hold read-only state,
// so one instance may serve concurrent passes on separate tapes.
class ShadowProgram {
 public:
  virtual ~ShadowProgram() = default;
  virtual ShadowOutputs Forward(ad::Tape& tape, ad::Var point_to,
                                ad::Var pattern, const TaskParams& params,
                                const sim::EnvImage& image) const = 0;
  virtual const ShadowConfig& config() const = 0;
};

class MuttShadowProgram : public ShadowProgram {
 public:
  MuttShadowProgram(const ModelWeights& weights, ShadowConfig cfg);
  ShadowOutputs Forward(ad::Tape& tape, ad::Var point_to, ad::Var pattern,
                        const TaskParams& params,
                        const sim::EnvImage& image) const override;
  const ShadowConfig& config() const override { return cfg_; }
  const ModelWeights& weights() const { return weights_; }

 private:
  const ModelWeights& weights_;
  ShadowConfig cfg_;
};

// Stub that knows the true hole: p_k = 1 / (1 + (d_k / r)^4) for the
// planar distance d_k between probe k and the hole, durations from the
// planner's nominal contact cycle.
class OracleShadowProgram : public ShadowProgram {
 public:
  OracleShadowProgram(const sim::EnvState& env, ShadowConfig cfg)
      : env_(env), cfg_(cfg) {}
  ShadowOutputs Forward(ad::Tape& tape, ad::Var point_to, ad::Var pattern,
                        const TaskParams& params,
                        const sim::EnvImage& image) const override;
  const ShadowConfig& config() const override { return cfg_; }

 private:
  sim::EnvState env_;
  ShadowConfig cfg_;
};

// Cumulative point counts from cumulative times (K x 1 seconds).
ad::Var LengthsFromTimes(ad::Var cumulative_time, double sample_dt);

struct SearchPrediction {
  std::vector<double> p_probe;
  double p_success = 0.0;
  double expected_length = 0.0;
  std::vector<double> q;  // termination distribution, q_fail excluded
  double q_fail = 0.0;
  std::vector<ProbePrediction> probes;
  Trajectory trajectory;  // predicted, for reporting only
  int terminating_probe = 0;  // 0-based index of the last predicted probe
};

// Concrete prediction for a program with the given parameters.
SearchPrediction PredictSearch(const MuttShadowProgram& shadow,
                               const TaskParams& params,
                               const sim::EnvImage& image);

// Assembles the predicted trajectory: approach and lateral moves sampled
// from the planner, probe profiles spread over their predicted durations,
// truncated after `last_probe` and resampled onto the sample clock.
Trajectory AssembleTrajectory(const TaskParams& params,
                              const std::vector<ProbePrediction>& probes,
                              int last_probe, bool success,
                              const ShadowConfig& cfg);

// Most likely way the search ends: argmax over q_1..q_K and q_fail, where
// q_fail selects the last probe.
int TerminatingProbe(const std::vector<double>& q, double q_fail);

}  // namespace probeopt::mutt

#endif  // PROBEOPT_MUTT_MODEL_H_
