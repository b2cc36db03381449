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
#include "probeopt/harness/pipeline.h"

#include <cmath>
#include <cstdio>
#include <memory>

#include "probeopt/core/errors.h"
#include "probeopt/mutt/model.h"

namespace probeopt::harness {
namespace {

void Log(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

// Undefined F1 prints as "nan" regardless of platform formatting.
std::string F1Text(double f1) {
  return std::isnan(f1) ? "nan" : Fmt("%.4f", f1);
}

spi::EvaluateOptions EvalOptions(const HarnessConfig& cfg) {
  spi::EvaluateOptions e;
  e.n_envs = cfg.n_envs;
  e.seed = cfg.seed;
  e.pattern_size = cfg.pattern_size;
  e.threads = cfg.threads;
  return e;
}

std::string EpochMessage(const char* stage, const train::TrainingCurve& c) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s epoch %d loss %.6f", stage,
                c.back().epoch, c.back().loss);
  return buf;
}

}  // namespace

train::Dataset CollectStage(const HarnessConfig& cfg) {
  train::CollectOptions o;
  o.test_size = cfg.test_size;
  o.pattern_size = cfg.pattern_size;
  o.profile_len = cfg.train.model.profile_len;
  o.threads = cfg.threads;
  return train::CollectDataset(cfg.sim, cfg.domain, cfg.collect_n, cfg.seed, o);
}

mutt::ModelWeights TrainProbeStage(const train::Dataset& ds,
                                   const HarnessConfig& cfg,
                                   train::TrainingCurve* curve,
                                   const Logger& log) {
  train::TrainingCurve local;
  train::TrainingCurve& c = curve ? *curve : local;
  return train::TrainProbeModel(ds, cfg.train, &c,
                                [&](int, const mutt::ModelWeights&) {
                                  Log(log, EpochMessage("probe", c));
                                });
}

void TrainSearchStage(const train::Dataset& ds, const HarnessConfig& cfg,
                      mutt::ModelWeights& w, train::TrainingCurve* curve,
                      const Logger& log) {
  const train::DistilledDataset distilled = train::DistillProbePredictions(
      ds.train, w, ds.meta.stats, cfg.threads);
  train::TrainingCurve local;
  train::TrainingCurve& c = curve ? *curve : local;
  train::TrainSearchModel(distilled, w, cfg.train,
                          mutt::ShadowConfigFor(cfg.sim), &c,
                          [&](int, const mutt::ModelWeights&) {
                            Log(log, EpochMessage("search", c));
                          });
}

train::Evaluation EvaluatePredictions(const train::OutcomePredictor& predictor,
                                      const train::Dataset& ds,
                                      const HarnessConfig& cfg) {
  return train::EvaluateModels(predictor, ds.test, cfg.threads);
}

spi::OptimizationReport OptimizeWithModel(const mutt::ModelWeights& w,
                                          const HarnessConfig& cfg) {
  const mutt::ShadowConfig shadow = mutt::ShadowConfigFor(cfg.sim);
  return spi::EvaluateOptimization(
      [&](const sim::EnvState&) {
        return std::make_unique<mutt::MuttShadowProgram>(w, shadow);
      },
      cfg.sim, cfg.domain, cfg.optimize, EvalOptions(cfg));
}

spi::OptimizationReport OptimizeWithOracle(const HarnessConfig& cfg) {
  const mutt::ShadowConfig shadow = mutt::ShadowConfigFor(cfg.sim);
  return spi::EvaluateOptimization(
      [&](const sim::EnvState& env) {
        return std::make_unique<mutt::OracleShadowProgram>(env, shadow);
      },
      cfg.sim, cfg.domain, cfg.optimize, EvalOptions(cfg));
}

std::vector<AblationRow> RunAblation(
    const train::Dataset& ds, const HarnessConfig& cfg,
    const std::vector<std::size_t>& sizes, const Logger& log,
    const std::function<void(std::size_t, const mutt::ModelWeights&)>&
        on_model) {
  for (std::size_t n : sizes) {
    if (n == 0 || n > ds.train.size()) {
      throw InvalidArgument("ablation size " + std::to_string(n) +
                            " exceeds the " + std::to_string(ds.train.size()) +
                            " training records");
    }
  }
  std::vector<AblationRow> rows;
  for (std::size_t n : sizes) {
    Log(log, "ablation: " + std::to_string(n) + " training records");
    const train::Dataset sub = train::TrainPrefix(ds, n);
    mutt::ModelWeights w = TrainProbeStage(sub, cfg, nullptr, log);
    TrainSearchStage(sub, cfg, w, nullptr, log);
    if (on_model) on_model(n, w);
    AblationRow row;
    row.n_train = n;
    row.prediction = EvaluatePredictions(
        train::MuttPredictor(w, mutt::ShadowConfigFor(cfg.sim)), sub, cfg);
    row.optimization = OptimizeWithModel(w, cfg).metrics;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string PredictionMetricsCsv(const train::Evaluation& e) {
  const PredictionMetrics& m = e.metrics;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "f1,true_pos,true_neg,false_pos,false_neg,mae_L,mae_L_percent,"
                "mae_P,mae_F,mean_length,aligned_mae_P,aligned_mae_F\n"
                "%s,%zu,%zu,%zu,%zu,%.4f,%.4f,%.6f,%.6f,%.4f,%.6f,%.6f\n",
                F1Text(m.f1).c_str(), m.true_pos, m.true_neg, m.false_pos,
                m.false_neg, m.mae_L, e.mae_L_percent(), m.mae_P, m.mae_F,
                m.mean_length, e.aligned_mae_P, e.aligned_mae_F);
  return buf;
}

std::string PredictionMarkdown(const train::Evaluation& e) {
  const PredictionMetrics& m = e.metrics;
  char buf[1024];
  std::snprintf(
      buf, sizeof(buf),
      "| metric | value |\n"
      "|---|---|\n"
      "| F1 | %s |\n"
      "| true pos. | %zu/%zu |\n"
      "| true neg. | %zu/%zu |\n"
      "| MAE L [points] | %.2f (%.1f %% of %.1f) |\n"
      "| MAE P [mm] | %.4f |\n"
      "| MAE F [N] | %.4f |\n"
      "| same-clock MAE P [mm] | %.4f |\n"
      "| same-clock MAE F [N] | %.4f |\n",
      F1Text(m.f1).c_str(), m.true_pos, m.true_pos + m.false_neg, m.true_neg,
      m.true_neg + m.false_pos, m.mae_L, e.mae_L_percent(), m.mean_length,
      m.mae_P, m.mae_F, e.aligned_mae_P, e.aligned_mae_F);
  return buf;
}

std::string AblationCsv(const std::vector<AblationRow>& rows) {
  std::string s =
      "n_train,f1,mae_L,mae_L_percent,mae_P,mae_F,ct_before,ct_after,"
      "probes_before,probes_after,sr_before,sr_after\n";
  char buf[512];
  for (const auto& r : rows) {
    const PredictionMetrics& p = r.prediction.metrics;
    const OptimizationMetrics& o = r.optimization;
    std::snprintf(buf, sizeof(buf),
                  "%zu,%s,%.4f,%.4f,%.6f,%.6f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n",
                  r.n_train, F1Text(p.f1).c_str(), p.mae_L,
                  r.prediction.mae_L_percent(), p.mae_P, p.mae_F, o.ct_before,
                  o.ct_after, o.probes_before, o.probes_after, o.sr_before,
                  o.sr_after);
    s += buf;
  }
  return s;
}

std::string AblationMarkdown(const std::vector<AblationRow>& rows) {
  std::string s =
      "| # train | F1 | MAE L | MAE P [mm] | MAE F [N] | CT [s] | # probes | "
      "SR [%] |\n|---|---|---|---|---|---|---|---|\n";
  char buf[512];
  for (const auto& r : rows) {
    const PredictionMetrics& p = r.prediction.metrics;
    const OptimizationMetrics& o = r.optimization;
    std::snprintf(buf, sizeof(buf),
                  "| %zu | %s | %.2f | %.4f | %.4f | %.2f (%.2f) | "
                  "%.2f (%.2f) | %.1f (%.1f) |\n",
                  r.n_train, F1Text(p.f1).c_str(), p.mae_L, p.mae_P, p.mae_F,
                  o.ct_after, o.ct_before, o.probes_after, o.probes_before,
                  100.0 * o.sr_after, 100.0 * o.sr_before);
    s += buf;
  }
  return s;
}

}  // namespace probeopt::harness
