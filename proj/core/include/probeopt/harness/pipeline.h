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
// Pipeline stages shared by the command-line tool and the acceptance suite.

#ifndef PROBEOPT_HARNESS_PIPELINE_H_
#define PROBEOPT_HARNESS_PIPELINE_H_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "probeopt/harness/config.h"
#include "probeopt/mutt/weights.h"
#include "probeopt/spi/optimizer.h"
#include "probeopt/training/dataset.h"
#include "probeopt/training/evaluate.h"
#include "probeopt/training/trainer.h"

namespace probeopt::harness {

// Progress messages; may be empty.
using Logger = std::function<void(const std::string&)>;

train::Dataset CollectStage(const HarnessConfig& cfg);

// Probe stage on ds.train. Curve points are appended to `curve`.
mutt::ModelWeights TrainProbeStage(const train::Dataset& ds,
                                   const HarnessConfig& cfg,
                                   train::TrainingCurve* curve,
                                   const Logger& log = {});

// Search stage on probe-model predictions for ds.train; fills w.search.
void TrainSearchStage(const train::Dataset& ds, const HarnessConfig& cfg,
                      mutt::ModelWeights& w, train::TrainingCurve* curve,
                      const Logger& log = {});

train::Evaluation EvaluatePredictions(const train::OutcomePredictor& predictor,
                                      const train::Dataset& ds,
                                      const HarnessConfig& cfg);

// Baseline vs optimized programs on cfg.n_envs unseen environments.
spi::OptimizationReport OptimizeWithModel(const mutt::ModelWeights& w,
                                          const HarnessConfig& cfg);
// Same with the ground-truth oracle stub in place of the learned model.
spi::OptimizationReport OptimizeWithOracle(const HarnessConfig& cfg);

struct AblationRow {
  std::size_t n_train = 0;
  train::Evaluation prediction;
  OptimizationMetrics optimization;
};

// Trains and evaluates on nested train prefixes of one dataset. Throws
// InvalidArgument when a size exceeds the training split. `on_model`, if
// set, receives each trained model.
std::vector<AblationRow> RunAblation(
    const train::Dataset& ds, const HarnessConfig& cfg,
    const std::vector<std::size_t>& sizes, const Logger& log = {},
    const std::function<void(std::size_t, const mutt::ModelWeights&)>&
        on_model = {});

// Reports. Numbers use fixed precision so reruns are byte-identical.
std::string PredictionMetricsCsv(const train::Evaluation& e);
std::string PredictionMarkdown(const train::Evaluation& e);
std::string AblationCsv(const std::vector<AblationRow>& rows);
std::string AblationMarkdown(const std::vector<AblationRow>& rows);

}  // namespace probeopt::harness

#endif  // PROBEOPT_HARNESS_PIPELINE_H_
