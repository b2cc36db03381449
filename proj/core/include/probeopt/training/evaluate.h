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
// Held-out evaluation of search outcome predictors.

#ifndef PROBEOPT_TRAINING_EVALUATE_H_
#define PROBEOPT_TRAINING_EVALUATE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "probeopt/core/types.h"
#include "probeopt/mutt/model.h"
#include "probeopt/simenv/simulator.h"

namespace probeopt::train {

struct PredictedOutcome {
  bool success = false;
  double p_success = 0.0;
  Trajectory trajectory;
};

class OutcomePredictor {
 public:
  virtual ~OutcomePredictor() = default;
  virtual PredictedOutcome Predict(const sim::ExecutionRecord& rec) const = 0;
};

// Learned predictor; reads only the record's program parameters and image.
class MuttPredictor : public OutcomePredictor {
 public:
  MuttPredictor(const mutt::ModelWeights& w, mutt::ShadowConfig cfg)
      : shadow_(w, cfg) {}
  PredictedOutcome Predict(const sim::ExecutionRecord& rec) const override;

 private:
  mutt::MuttShadowProgram shadow_;
};

// Upper-bound stub that returns the recorded ground truth.
class GroundTruthPredictor : public OutcomePredictor {
 public:
  PredictedOutcome Predict(const sim::ExecutionRecord& rec) const override {
    return {rec.trajectory.success, rec.trajectory.success ? 1.0 : 0.0,
            rec.trajectory};
  }
};

struct EvalRow {
  std::uint64_t seed = 0;
  bool success = false;
  bool predicted_success = false;
  double p_success = 0.0;
  std::size_t length = 0;
  std::size_t predicted_length = 0;
  double mae_P = 0.0;
  double mae_F = 0.0;
  double aligned_mae_P = 0.0;
  double aligned_mae_F = 0.0;
};

struct Evaluation {
  PredictionMetrics metrics;  // resampled trajectory comparison
  double aligned_mae_P = 0.0;  // same-clock comparison
  double aligned_mae_F = 0.0;
  std::vector<EvalRow> rows;

  double mae_L_percent() const {
    return metrics.mean_length > 0.0
               ? 100.0 * metrics.mae_L / metrics.mean_length
               : 0.0;
  }
};

// Classifies success at p >= 0.5 (success is the positive class) and
// averages trajectory errors over records. F1 is NaN when there is neither
// a positive label nor a positive prediction.
Evaluation EvaluateModels(const OutcomePredictor& predictor,
                          const std::vector<sim::ExecutionRecord>& test,
                          int threads = 1);

// csv with one row per record.
std::string EvaluationCsv(const Evaluation& e);

}  // namespace probeopt::train

#endif  // PROBEOPT_TRAINING_EVALUATE_H_
