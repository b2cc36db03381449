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
#include "probeopt/training/evaluate.h"

#include <cmath>
#include <cstdio>
#include <limits>

#include "probeopt/core/parallel.h"
#include "probeopt/core/trajectory.h"

namespace probeopt::train {

PredictedOutcome MuttPredictor::Predict(const sim::ExecutionRecord& rec) const {
  mutt::SearchPrediction p =
      mutt::PredictSearch(shadow_, rec.params, rec.image);
  return {p.p_success >= 0.5, p.p_success, std::move(p.trajectory)};
}

Evaluation EvaluateModels(const OutcomePredictor& predictor,
                          const std::vector<sim::ExecutionRecord>& test,
                          int threads) {
  Evaluation e;
  e.rows.resize(test.size());
  ParallelFor(test.size(), threads, [&](std::size_t i) {
    const auto& rec = test[i];
    const PredictedOutcome out = predictor.Predict(rec);
    const TrajectoryErrors r = TrajectoryMetrics(out.trajectory, rec.trajectory);
    const TrajectoryErrors a =
        TimeAlignedMetrics(out.trajectory, rec.trajectory);
    EvalRow& row = e.rows[i];
    row.seed = rec.seed;
    row.success = rec.trajectory.success;
    row.predicted_success = out.success;
    row.p_success = out.p_success;
    row.length = rec.trajectory.size();
    row.predicted_length = out.trajectory.size();
    row.mae_P = r.mae_P;
    row.mae_F = r.mae_F;
    row.aligned_mae_P = a.mae_P;
    row.aligned_mae_F = a.mae_F;
  });
  PredictionMetrics& m = e.metrics;
  if (test.empty()) return e;
  for (const auto& row : e.rows) {
    if (row.success && row.predicted_success) ++m.true_pos;
    if (!row.success && !row.predicted_success) ++m.true_neg;
    if (!row.success && row.predicted_success) ++m.false_pos;
    if (row.success && !row.predicted_success) ++m.false_neg;
    m.mae_L += std::abs(static_cast<double>(row.predicted_length) -
                        static_cast<double>(row.length));
    m.mae_P += row.mae_P;
    m.mae_F += row.mae_F;
    m.mean_length += static_cast<double>(row.length);
    e.aligned_mae_P += row.aligned_mae_P;
    e.aligned_mae_F += row.aligned_mae_F;
  }
  const auto n = static_cast<double>(test.size());
  m.mae_L /= n;
  m.mae_P /= n;
  m.mae_F /= n;
  m.mean_length /= n;
  e.aligned_mae_P /= n;
  e.aligned_mae_F /= n;
  m.f1 = (m.true_pos + m.false_pos + m.false_neg) == 0
             ? std::numeric_limits<double>::quiet_NaN()
             : F1Score(m.true_pos, m.false_pos, m.false_neg);
  return e;
}

std::string EvaluationCsv(const Evaluation& e) {
  std::string out =
      "seed,success,predicted_success,p_success,length,predicted_length,"
      "mae_P,mae_F,aligned_mae_P,aligned_mae_F\n";
  char buf[256];
  for (const auto& r : e.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%llu,%d,%d,%.6f,%zu,%zu,%.6f,%.6f,%.6f,%.6f\n",
                  static_cast<unsigned long long>(r.seed), r.success ? 1 : 0,
                  r.predicted_success ? 1 : 0, r.p_success, r.length,
                  r.predicted_length, r.mae_P, r.mae_F, r.aligned_mae_P,
                  r.aligned_mae_F);
    out += buf;
  }
  return out;
}

}  // namespace probeopt::train
