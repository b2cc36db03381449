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
// Two-stage supervised training of the probe and search models.

#ifndef PROBEOPT_TRAINING_TRAINER_H_
#define PROBEOPT_TRAINING_TRAINER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "probeopt/mutt/model.h"
#include "probeopt/mutt/weights.h"
#include "probeopt/training/dataset.h"

namespace probeopt::train {

struct TrainConfig {
  int epochs = 100;
  int search_epochs = 0;  // 0: same as epochs
  double learning_rate = 5e-5;  // initial rate, decays linearly to 0
  int batch_size = 32;  // probes (probe stage) or records (search stage)
  double probe_bce_weight = 1.0;
  double success_bce_weight = 1.0;
  double length_weight = 1.0;
  double grad_clip = 1.0;  // global norm, 0 disables
  std::uint64_t seed = 0;
  mutt::ModelConfig model;

  void Validate() const;
};

struct CurvePoint {
  int epoch = 0;
  std::string stage;
  double loss = 0.0;
};
using TrainingCurve = std::vector<CurvePoint>;

// csv with header "epoch,stage,loss".
std::string CurvesCsv(const TrainingCurve& curve);

// Called after every epoch with the current weights (progress logging,
// validation curves).
using EpochHook = std::function<void(int epoch, const mutt::ModelWeights&)>;

// Trains the probe model on every executed probe of ds.train. The returned
// weights carry ds.meta.stats and freshly initialized search parameters.
mutt::ModelWeights TrainProbeModel(const Dataset& ds, const TrainConfig& cfg,
                                   TrainingCurve* curve = nullptr,
                                   const EpochHook& hook = {});

// Mean squared error in normalized target space over all executed probes.
double ProbeLoss(const mutt::ModelWeights& w,
                 const std::vector<sim::ExecutionRecord>& records);

// Records paired with one probe prediction per pattern entry.
struct DistilledDataset {
  std::vector<sim::ExecutionRecord> records;
  std::vector<std::vector<mutt::ProbePrediction>> probes;
};

using ProbePredictorFn = std::function<std::vector<mutt::ProbePrediction>(
    const sim::ExecutionRecord&)>;

// Replaces per-probe ground truth with the probe model's predictions.
// Throws InvalidArgument when w was trained on different statistics.
DistilledDataset DistillProbePredictions(
    const std::vector<sim::ExecutionRecord>& records,
    const mutt::ModelWeights& w, const mutt::Normalization& stats,
    int threads = 1);
DistilledDataset DistillWith(const std::vector<sim::ExecutionRecord>& records,
                             const ProbePredictorFn& predict);

// Probe-model predictions for every pattern entry of a record.
std::vector<mutt::ProbePrediction> PredictProbes(const mutt::ModelWeights& w,
                                                 const TaskParams& params,
                                                 const sim::EnvImage& image);

// Fills w.search and the search-feature statistics of w.norm.
void TrainSearchModel(const DistilledDataset& data, mutt::ModelWeights& w,
                      const TrainConfig& cfg, const mutt::ShadowConfig& shadow,
                      TrainingCurve* curve = nullptr,
                      const EpochHook& hook = {});

}  // namespace probeopt::train

#endif  // PROBEOPT_TRAINING_TRAINER_H_
