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
#include "probeopt/training/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "probeopt/autodiff/adam.h"
#include "probeopt/autodiff/ops.h"
#include "probeopt/core/errors.h"
#include "probeopt/core/parallel.h"
#include "probeopt/planner/planner.h"
#include "probeopt/training/targets.h"

namespace probeopt::train {
namespace {

using ad::Matrix;
using ad::Var;
using mutt::ParamBinder;
using mutt::ParamSet;

// Shared optimizer plumbing: Adam with linear decay and global-norm clipping.
class Stepper {
 public:
  Stepper(ParamSet& params, double lr0, double clip, std::size_t total_steps)
      : params_(params), lr0_(lr0), clip_(clip), total_(total_steps) {
    for (auto& [name, m] : params_) ptrs_.push_back(&m);
  }

  void Step(ParamSet& grads) {
    std::vector<const Matrix*> g;
    double sq = 0.0;
    for (auto& [name, m] : params_) {
      auto [it, fresh] = grads.try_emplace(name);
      if (fresh) it->second = Matrix::Zero(m.rows(), m.cols());
      sq += it->second.squaredNorm();
      g.push_back(&it->second);
    }
    if (!std::isfinite(sq)) throw NumericError("non-finite training gradient");
    if (clip_ > 0.0 && sq > clip_ * clip_) {
      const double s = clip_ / std::sqrt(sq);
      for (auto& [name, m] : grads) m *= s;
    }
    const double frac = static_cast<double>(step_) / static_cast<double>(total_);
    const double lr = lr0_ * std::max(0.0, 1.0 - frac);
    adam_.Step(ptrs_, g, lr);
    ++step_;
  }

 private:
  ParamSet& params_;
  std::vector<Matrix*> ptrs_;
  ad::Adam adam_;
  double lr0_;
  double clip_;
  std::size_t total_;
  std::size_t step_ = 0;
};

bool SameProbeStats(const mutt::Normalization& a,
                    const mutt::Normalization& b) {
  return a.pixel_mean == b.pixel_mean && a.pixel_scale == b.pixel_scale &&
         a.context_mean == b.context_mean &&
         a.context_scale == b.context_scale && a.z_mean == b.z_mean &&
         a.z_scale == b.z_scale && a.fz_mean == b.fz_mean &&
         a.fz_scale == b.fz_scale && a.duration_mean == b.duration_mean &&
         a.duration_scale == b.duration_scale &&
         a.depth_mean == b.depth_mean && a.depth_scale == b.depth_scale;
}

struct ProbeSample {
  const sim::ExecutionRecord* rec;
  Matrix context;
  Matrix target;  // normalized
};

std::vector<ProbeSample> ProbeSamples(
    const std::vector<sim::ExecutionRecord>& records,
    const mutt::ModelWeights& w) {
  std::vector<ProbeSample> out;
  for (const auto& r : records) {
    ProbeTargets t = ExtractProbeTargets(r, w.arch.profile_len);
    if (t.targets.rows() == 0) continue;
    out.push_back({&r, std::move(t.context), NormalizeTargets(t.targets, w.norm)});
  }
  return out;
}

// Sum of squared normalized errors for one record.
Var ProbeRecordLoss(ParamBinder& b, const mutt::ModelWeights& w,
                    const ProbeSample& s) {
  ad::Tape& tape = b.tape();
  Var tok = mutt::EncodeImage(b, w.arch, w.norm, s.rec->image);
  mutt::ProbeOutputs o = mutt::ProbeForward(b, w.arch, w.norm, tok,
                                            tape.Constant(s.context));
  return ad::Sum(ad::Square(o.normalized - tape.Constant(s.target)));
}

// Groups consecutive samples of `order` until each group has at least
// `min_rows` probe rows.
std::vector<std::vector<std::size_t>> Batches(
    const std::vector<std::size_t>& order,
    const std::vector<ProbeSample>& samples, int min_rows) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  Eigen::Index rows = 0;
  for (std::size_t i : order) {
    cur.push_back(i);
    rows += samples[i].context.rows();
    if (rows >= min_rows) {
      out.push_back(std::move(cur));
      cur.clear();
      rows = 0;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct SearchSample {
  const sim::ExecutionRecord* rec;
  Matrix features;   // raw, K x kFeatureDim
  Matrix lengths;    // K x 1, cumulative points
  std::vector<int> labels;
  double length = 0.0;  // ground-truth points
};

Matrix PlannedLengths(const sim::ExecutionRecord& rec,
                      const std::vector<mutt::ProbePrediction>& probes,
                      const mutt::ShadowConfig& shadow) {
  ad::Tape tape;
  const TaskParams& p = rec.params;
  Matrix pt(1, 3);
  pt << p.point_to.x, p.point_to.y, p.point_to.z;
  Matrix pat(static_cast<Eigen::Index>(p.pattern.size()), 2);
  for (std::size_t i = 0; i < p.pattern.size(); ++i) {
    pat(static_cast<Eigen::Index>(i), 0) = p.pattern[i].dx;
    pat(static_cast<Eigen::Index>(i), 1) = p.pattern[i].dy;
  }
  const planner::SearchPlan plan = planner::ComposeSearchPlan(
      shadow.home, tape.Constant(pt), tape.Constant(pat), p, shadow.planner);
  Matrix len(static_cast<Eigen::Index>(probes.size()), 1);
  double t = plan.approach.scalar();
  for (std::size_t k = 0; k < probes.size(); ++k) {
    t += plan.lateral[k].scalar() + probes[k].duration;
    len(static_cast<Eigen::Index>(k), 0) = t / shadow.sample_dt + 1.0;
  }
  return len;
}

Var SearchRecordLoss(ParamBinder& b, const mutt::ModelWeights& w,
                     const SearchSample& s, const TrainConfig& cfg) {
  ad::Tape& tape = b.tape();
  Var tok = mutt::EncodeImage(b, w.arch, w.norm, s.rec->image);
  Var logits = mutt::SearchForward(b, w.arch, w.norm, tok,
                                   tape.Constant(s.features));
  const auto k_all = logits.rows();
  const auto n = static_cast<Eigen::Index>(s.labels.size());
  Var loss = tape.Scalar(0.0);
  if (n > 0) {
    Matrix y(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) y(i, 0) = s.labels[i];
    Var ln = ad::Slice(logits, 0, n, 0, 1);
    Var bce = ad::Sum(ad::Softplus(ln) - ln * tape.Constant(y));
    loss = loss + bce * (cfg.probe_bce_weight / static_cast<double>(n));
  }
  // -log(1 - p_success) = sum_k softplus(logit_k).
  Var miss = ad::Sum(ad::Softplus(logits));
  Var succ_bce = s.rec->trajectory.success
                     ? -ad::Log((1.0 - ad::Exp(-miss)) + 1e-12)
                     : miss;
  loss = loss + succ_bce * cfg.success_bce_weight;
  if (cfg.length_weight > 0.0) {
    mutt::SurvivalChain chain = mutt::Aggregate(ad::Sigmoid(logits));
    Var expected =
        mutt::ExpectOverTermination(chain, tape.Constant(s.lengths));
    const double full = s.lengths(k_all - 1, 0);
    Var err = (expected - s.length) * (1.0 / full);
    loss = loss + ad::Square(err) * cfg.length_weight;
  }
  return loss;
}

std::vector<std::size_t> Shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with explicit draws so the order is library independent.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace

void TrainConfig::Validate() const {
  if (epochs < 1 || search_epochs < 0 || batch_size < 1 ||
      !(learning_rate > 0.0) || probe_bce_weight < 0.0 ||
      success_bce_weight < 0.0 || length_weight < 0.0 || grad_clip < 0.0) {
    throw InvalidArgument("train config: epochs, batch size and learning rate "
                          "must be positive, weights non-negative");
  }
  model.Validate();
}

std::string CurvesCsv(const TrainingCurve& curve) {
  std::string out = "epoch,stage,loss\n";
  char buf[96];
  for (const auto& c : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.17g\n", c.epoch, c.stage.c_str(),
                  c.loss);
    out += buf;
  }
  return out;
}

mutt::ModelWeights TrainProbeModel(const Dataset& ds, const TrainConfig& cfg,
                                   TrainingCurve* curve, const EpochHook& hook) {
  cfg.Validate();
  if (ds.train.empty()) throw InvalidArgument("probe training: empty dataset");
  if (cfg.model.profile_len != ds.meta.profile_len) {
    throw InvalidArgument("probe training: model profile_len differs from the "
                          "dataset statistics");
  }
  mutt::ModelWeights w = mutt::InitWeights(cfg.model, cfg.seed);
  w.norm = ds.meta.stats;
  const std::vector<ProbeSample> samples = ProbeSamples(ds.train, w);
  if (samples.empty()) throw InvalidArgument("probe training: no probes");
  std::size_t total_rows = 0;
  for (const auto& s : samples) total_rows += s.context.rows();
  const std::size_t steps_per_epoch =
      std::max<std::size_t>(1, total_rows / cfg.batch_size);
  Stepper stepper(w.probe, cfg.learning_rate, cfg.grad_clip,
                  steps_per_epoch * static_cast<std::size_t>(cfg.epochs));
  const double outputs = static_cast<double>(w.arch.probe_outputs());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = Shuffled(samples.size(), cfg.seed * 1000003ULL + epoch);
    double sum = 0.0;
    for (const auto& batch : Batches(order, samples, cfg.batch_size)) {
      ad::Tape tape;
      ParamBinder b(tape, w.probe, true);
      Eigen::Index rows = 0;
      Var total = tape.Scalar(0.0);
      for (std::size_t i : batch) {
        total = total + ProbeRecordLoss(b, w, samples[i]);
        rows += samples[i].context.rows();
      }
      Var loss = total * (1.0 / (static_cast<double>(rows) * outputs));
      sum += total.scalar();
      tape.Backward(loss);
      ParamSet grads;
      b.AccumulateGrads(grads);
      stepper.Step(grads);
    }
    if (curve) {
      curve->push_back(
          {epoch, "probe",
           sum / (static_cast<double>(total_rows) * outputs)});
    }
    if (hook) hook(epoch, w);
  }
  return w;
}

double ProbeLoss(const mutt::ModelWeights& w,
                 const std::vector<sim::ExecutionRecord>& records) {
  const auto samples = ProbeSamples(records, w);
  double sum = 0.0;
  std::size_t rows = 0;
  for (const auto& s : samples) {
    ad::Tape tape;
    ParamBinder b(tape, w.probe, false);
    sum += ProbeRecordLoss(b, w, s).scalar();
    rows += s.context.rows();
  }
  if (rows == 0) throw InvalidArgument("probe loss: no probes");
  return sum / (static_cast<double>(rows) * w.arch.probe_outputs());
}

std::vector<mutt::ProbePrediction> PredictProbes(const mutt::ModelWeights& w,
                                                 const TaskParams& params,
                                                 const sim::EnvImage& image) {
  ad::Tape tape;
  ParamBinder b(tape, w.probe, false);
  Var tok = mutt::EncodeImage(b, w.arch, w.norm, image);
  return mutt::ProbeForward(b, w.arch, w.norm, tok,
                            tape.Constant(mutt::ProbeContext(params)))
      .Values();
}

DistilledDataset DistillWith(const std::vector<sim::ExecutionRecord>& records,
                             const ProbePredictorFn& predict) {
  DistilledDataset d;
  d.records = records;
  d.probes.reserve(records.size());
  for (const auto& r : records) {
    auto p = predict(r);
    if (p.size() != r.params.pattern.size()) {
      throw InvalidArgument("distill: predictor returned " +
                            std::to_string(p.size()) + " probes for a " +
                            std::to_string(r.params.pattern.size()) +
                            "-probe pattern");
    }
    d.probes.push_back(std::move(p));
  }
  return d;
}

DistilledDataset DistillProbePredictions(
    const std::vector<sim::ExecutionRecord>& records,
    const mutt::ModelWeights& w, const mutt::Normalization& stats,
    int threads) {
  if (!SameProbeStats(w.norm, stats)) {
    throw InvalidArgument("distill: probe model was trained with different "
                          "normalization statistics");
  }
  DistilledDataset d;
  d.records = records;
  d.probes.resize(records.size());
  ParallelFor(records.size(), threads, [&](std::size_t i) {
    d.probes[i] = PredictProbes(w, records[i].params, records[i].image);
  });
  return d;
}

void TrainSearchModel(const DistilledDataset& data, mutt::ModelWeights& w,
                      const TrainConfig& cfg, const mutt::ShadowConfig& shadow,
                      TrainingCurve* curve, const EpochHook& hook) {
  cfg.Validate();
  if (data.records.empty() || data.probes.size() != data.records.size()) {
    throw InvalidArgument("search training: missing probe predictions");
  }
  // Feature statistics over every pattern entry of the training records.
  Matrix all(0, mutt::kFeatureDim);
  std::vector<SearchSample> samples;
  samples.reserve(data.records.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    if (data.probes[i].size() != r.params.pattern.size()) {
      throw InvalidArgument("search training: missing probe predictions");
    }
    SearchSample s;
    s.rec = &r;
    s.features = mutt::SearchFeatures(r.params, data.probes[i]);
    s.lengths = PlannedLengths(r, data.probes[i], shadow);
    s.labels = ProbeLabels(r);
    s.length = static_cast<double>(r.trajectory.size());
    samples.push_back(std::move(s));
  }
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(mutt::kFeatureDim);
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(mutt::kFeatureDim);
  double rows = 0.0;
  for (const auto& s : samples) {
    sum += s.features.colwise().sum();
    sq += s.features.array().square().matrix().colwise().sum();
    rows += static_cast<double>(s.features.rows());
  }
  w.norm.feature_mean = sum / rows;
  for (int c = 0; c < mutt::kFeatureDim; ++c) {
    const double var =
        sq(c) / rows - w.norm.feature_mean(c) * w.norm.feature_mean(c);
    const double sd = std::sqrt(std::max(var, 0.0));
    w.norm.feature_scale(c) = sd > 1e-6 ? sd : 1.0;
  }

  w.search = mutt::InitSearchParams(w.arch, cfg.seed ^ 0x5bd1e995ULL);
  const int epochs = cfg.search_epochs > 0 ? cfg.search_epochs : cfg.epochs;
  const std::size_t per_epoch = (samples.size() + cfg.batch_size - 1) /
                                static_cast<std::size_t>(cfg.batch_size);
  Stepper stepper(w.search, cfg.learning_rate, cfg.grad_clip,
                  per_epoch * static_cast<std::size_t>(epochs));
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto order =
        Shuffled(samples.size(), cfg.seed * 1000003ULL + 7919ULL * epoch);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      ad::Tape tape;
      ParamBinder b(tape, w.search, true);
      Var acc = tape.Scalar(0.0);
      for (std::size_t i = start; i < end; ++i) {
        acc = acc + SearchRecordLoss(b, w, samples[order[i]], cfg);
      }
      total += acc.scalar();
      tape.Backward(acc * (1.0 / static_cast<double>(end - start)));
      ParamSet grads;
      b.AccumulateGrads(grads);
      stepper.Step(grads);
    }
    if (curve) {
      curve->push_back(
          {epoch, "search", total / static_cast<double>(samples.size())});
    }
    if (hook) hook(epoch, w);
  }
}

}  // namespace probeopt::train
