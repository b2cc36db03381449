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
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "probeopt/core/errors.h"
#include "probeopt/core/trajectory.h"
#include "probeopt/mutt/model.h"
#include "probeopt/spi/optimizer.h"
#include "probeopt/training/dataset.h"
#include "probeopt/training/evaluate.h"
#include "probeopt/training/targets.h"
#include "probeopt/training/trainer.h"

namespace probeopt::train {
namespace {

namespace fs = std::filesystem;

const Dataset& SmallDataset() {
  static const Dataset ds =
      CollectDataset(sim::SimConfig{}, ParamDomain{}, 120, 5);
  return ds;
}

std::string Slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("probeopt_training_" + name);
  fs::remove_all(p);
  return p;
}

TEST(Split, TestCountRule) {
  EXPECT_EQ(TestCount(4000, 200), 200u);
  EXPECT_EQ(TestCount(201, 200), 200u);
  EXPECT_EQ(TestCount(200, 200), 40u);
  EXPECT_EQ(TestCount(10, 200), 2u);
  EXPECT_EQ(TestCount(1, 200), 0u);
}

TEST(Split, SeedsAreDisjointAcrossSplitsAndEvaluation) {
  const Dataset& ds = SmallDataset();
  EXPECT_EQ(ds.train.size(), 96u);
  EXPECT_EQ(ds.test.size(), 24u);
  std::set<std::uint64_t> seeds;
  for (const auto& r : ds.train) seeds.insert(r.seed);
  for (const auto& r : ds.test) EXPECT_EQ(seeds.count(r.seed), 0u);
  for (const auto& r : ds.test) seeds.insert(r.seed);
  EXPECT_EQ(seeds.size(), 120u);
  for (std::size_t i = 0; i < 1000; ++i) {
    EXPECT_EQ(seeds.count(spi::EvaluationSeed(5, i)), 0u);
  }
  // The test split is the tail of the episode sequence.
  EXPECT_EQ(ds.test.front().seed, EpisodeSeed(5, 96));
}

TEST(CollectDataset, StatsComeFromTrainSplitOnly) {
  const Dataset& ds = SmallDataset();
  EXPECT_EQ(ds.meta.stats, ComputeStats(ds.train, ds.meta.profile_len));
}

TEST(CollectDataset, BothOutcomesAndPlausibleProbeCounts) {
  const Dataset ds = CollectDataset(sim::SimConfig{}, ParamDomain{}, 400, 9);
  const SplitSummary s = Summarize(ds.train);
  EXPECT_GE(s.success, s.count / 20);
  EXPECT_GE(s.fail, s.count / 20);
  EXPECT_GE(s.mean_probes, 3.0);
  EXPECT_LE(s.mean_probes, 15.0);
}

TEST(CollectDataset, SingleEpisodeIsReproducible) {
  const fs::path a = TempDir("one_a"), b = TempDir("one_b");
  SaveDataset(CollectDataset(sim::SimConfig{}, ParamDomain{}, 1, 7), a);
  SaveDataset(CollectDataset(sim::SimConfig{}, ParamDomain{}, 1, 7), b);
  for (const char* f : {"meta.json", "train.ndjson", "test.ndjson"}) {
    EXPECT_EQ(Slurp(a / f), Slurp(b / f)) << f;
  }
  EXPECT_FALSE(Slurp(a / "train.ndjson").empty());
}

TEST(CollectDataset, ParallelCollectionMatchesSerial) {
  CollectOptions o;
  o.threads = 3;
  const Dataset par = CollectDataset(sim::SimConfig{}, ParamDomain{}, 30, 2, o);
  const Dataset ser = CollectDataset(sim::SimConfig{}, ParamDomain{}, 30, 2);
  ASSERT_EQ(par.train.size(), ser.train.size());
  for (std::size_t i = 0; i < par.train.size(); ++i) {
    EXPECT_EQ(par.train[i].trajectory.size(), ser.train[i].trajectory.size());
    EXPECT_EQ(par.train[i].image, ser.train[i].image);
  }
}

TEST(Dataset, SaveLoadRoundTrip) {
  const fs::path dir = TempDir("roundtrip");
  SaveDataset(SmallDataset(), dir);
  const Dataset back = LoadDataset(dir);
  EXPECT_EQ(back.meta.stats, SmallDataset().meta.stats);
  EXPECT_EQ(back.meta.config_hash, SmallDataset().meta.config_hash);
  ASSERT_EQ(back.test.size(), SmallDataset().test.size());
  EXPECT_EQ(back.test[3].trajectory.points.back().fz,
            SmallDataset().test[3].trajectory.points.back().fz);
  const fs::path again = TempDir("roundtrip_again");
  SaveDataset(back, again);
  EXPECT_EQ(Slurp(dir / "train.ndjson"), Slurp(again / "train.ndjson"));
  EXPECT_EQ(Slurp(dir / "meta.json"), Slurp(again / "meta.json"));
}

TEST(Dataset, LoadRejectsMissingOrCorruptFiles) {
  EXPECT_THROW(LoadDataset(TempDir("missing")), LoadError);
  const fs::path dir = TempDir("corrupt");
  SaveDataset(CollectDataset(sim::SimConfig{}, ParamDomain{}, 5, 1), dir);
  std::ofstream(dir / "train.ndjson", std::ios::app) << "{not json\n";
  EXPECT_THROW(LoadDataset(dir), LoadError);
}

TEST(TrainPrefix, NestedPrefixesShareTestSplit) {
  const Dataset& ds = SmallDataset();
  const Dataset small = TrainPrefix(ds, 20);
  const Dataset mid = TrainPrefix(ds, 50);
  ASSERT_EQ(small.train.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(small.train[i].seed, mid.train[i].seed);
  }
  EXPECT_EQ(small.test.size(), ds.test.size());
  EXPECT_EQ(small.meta.stats, ComputeStats(small.train, ds.meta.profile_len));
  EXPECT_THROW(TrainPrefix(ds, 97), InvalidArgument);
}

TEST(BaselineParams, GridAroundSampledPointTo) {
  const TaskParams p = BaselineParams(ParamDomain{}, 20, 3);
  EXPECT_EQ(p.pattern, NominalGridPattern(20, 1.0));
  EXPECT_TRUE(ParamDomain{}.Contains(p));
  EXPECT_EQ(p.v_lateral, TaskParams{}.v_lateral);
}

TEST(BaselineParams, PartialCoverageOnSampledEnvironments) {
  const sim::SimConfig cfg;
  int success = 0;
  double probes = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const std::uint64_t s = spi::EvaluationSeed(1, i);
    const sim::EnvState env = sim::SampleEnvironment(s, cfg);
    const sim::ExecutionRecord r =
        sim::ExecuteProgram(env, BaselineParams(ParamDomain{}, 20, s), s, cfg);
    success += r.trajectory.success;
    probes += static_cast<double>(r.probe_count());
  }
  EXPECT_GT(success, 500);
  EXPECT_LT(success, 1000);
  EXPECT_GE(probes / 1000.0, 5.0);
  EXPECT_LE(probes / 1000.0, 15.0);
}

TEST(ProbeLabels, SuccessMarksLastExecutedProbe) {
  sim::EnvState env;
  env.hx = env.mx = 0.0;
  env.hy = env.my = 0.0;
  TaskParams p;
  p.point_to = {0.0, 0.0, 5.0};
  p.pattern = {{2.0, 0.0}, {-2.0, 0.0}, {0.0, 0.0}, {1.0, 1.0}};
  const sim::ExecutionRecord r = sim::ExecuteProgram(env, p, 1);
  EXPECT_EQ(ProbeLabels(r), (std::vector<int>{0, 0, 1}));
  p.pattern = {{2.0, 0.0}, {-2.0, 0.0}};
  EXPECT_EQ(ProbeLabels(sim::ExecuteProgram(env, p, 1)),
            (std::vector<int>{0, 0}));
}

TEST(ExtractProbeTargets, OneRowPerExecutedProbe) {
  const sim::ExecutionRecord& r = SmallDataset().train[0];
  const ProbeTargets t = ExtractProbeTargets(r, 25);
  ASSERT_EQ(t.targets.rows(), static_cast<Eigen::Index>(r.probe_count()));
  ASSERT_EQ(t.targets.cols(), 52);
  EXPECT_EQ(t.context.cols(), mutt::kContextDim);
  const auto& pts = r.trajectory.points;
  for (std::size_t k = 0; k < r.probe_count(); ++k) {
    const auto [s, e] = r.trajectory.probe_boundaries[k];
    // A probe ends at its retract; the last one runs to the final sample.
    const std::size_t stop = k + 1 < r.probe_count() ? e + 1 : pts.size();
    const auto row = static_cast<Eigen::Index>(k);
    double min_z = 1e9;
    for (std::size_t i = s; i < stop; ++i) min_z = std::min(min_z, pts[i].pose.z);
    EXPECT_DOUBLE_EQ(t.targets(row, 0), pts[s].pose.z);
    EXPECT_DOUBLE_EQ(t.targets(row, 50), pts[stop - 1].t - pts[s].t);
    EXPECT_DOUBLE_EQ(t.targets(row, 51), min_z);
    const Offset xy = r.params.ProbePosition(k);
    EXPECT_EQ(t.context(row, 0), xy.dx);
    EXPECT_EQ(t.context(row, 1), xy.dy);
  }
}

TEST(Distill, OracleStubReproducesTargets) {
  const auto& recs = SmallDataset().train;
  const DistilledDataset d = DistillWith(recs, [](const sim::ExecutionRecord& r) {
    auto executed = TargetsAsPredictions(ExtractProbeTargets(r, 25));
    executed.resize(r.params.pattern.size(), executed.back());
    return executed;
  });
  ASSERT_EQ(d.records.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(d.records[i].trajectory.success, recs[i].trajectory.success);
    EXPECT_EQ(d.records[i].seed, recs[i].seed);
    EXPECT_EQ(d.records[i].image, recs[i].image);
    const ProbeTargets t = ExtractProbeTargets(recs[i], 25);
    for (Eigen::Index k = 0; k < t.targets.rows(); ++k) {
      EXPECT_EQ(d.probes[i][static_cast<std::size_t>(k)].duration,
                t.targets(k, 50));
    }
  }
}

TEST(Distill, ResidualsAreTheProbeModelErrors) {
  const Dataset& ds = SmallDataset();
  TrainConfig cfg;
  cfg.epochs = 1;
  const mutt::ModelWeights w = TrainProbeModel(ds, cfg);
  const DistilledDataset d =
      DistillProbePredictions(ds.train, w, ds.meta.stats);
  const auto& r = ds.train[2];
  const auto pred = PredictProbes(w, r.params, r.image);
  const ProbeTargets t = ExtractProbeTargets(r, 25);
  for (Eigen::Index k = 0; k < t.targets.rows(); ++k) {
    const auto& got = d.probes[2][static_cast<std::size_t>(k)];
    EXPECT_EQ(got.duration - t.targets(k, 50),
              pred[static_cast<std::size_t>(k)].duration - t.targets(k, 50));
  }
  mutt::Normalization other = ds.meta.stats;
  other.z_mean += 1.0;
  EXPECT_THROW(DistillProbePredictions(ds.train, w, other), InvalidArgument);
}

TEST(TrainProbeModel, OverfitsTinyDataset) {
  // Noise-free records so the capacity check does not have to memorize
  // sensor noise; at least 32 probes.
  sim::SimConfig quiet;
  quiet.force_noise_sigma = 0.0;
  const Dataset full = CollectDataset(quiet, ParamDomain{}, 20, 5);
  std::size_t n = 0, probes = 0;
  while (probes < 32) probes += full.train[n++].probe_count();
  const Dataset tiny = TrainPrefix(full, n);
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 1;
  TrainingCurve curve;
  const mutt::ModelWeights w = TrainProbeModel(tiny, cfg, &curve);
  EXPECT_LT(ProbeLoss(w, tiny.train), 5e-3) << curve.front().loss;
  EXPECT_GT(curve.front().loss, 0.5);
}

TEST(Training, LossDecreasesForBothStagesOverSeeds) {
  const Dataset ds = TrainPrefix(SmallDataset(), 40);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.learning_rate = 1e-3;
    cfg.seed = seed;
    TrainingCurve curve;
    mutt::ModelWeights w = TrainProbeModel(ds, cfg, &curve);
    TrainSearchModel(DistillProbePredictions(ds.train, w, ds.meta.stats), w,
                     cfg, mutt::ShadowConfig{}, &curve);
    ASSERT_EQ(curve.size(), 12u);
    EXPECT_LT(curve[5].loss, curve[0].loss) << seed;
    EXPECT_LT(curve[11].loss, curve[6].loss) << seed;
    EXPECT_EQ(curve[6].stage, "search");
  }
}

TEST(Training, SameSeedReproducesCurves) {
  const Dataset ds = TrainPrefix(SmallDataset(), 10);
  TrainConfig cfg;
  cfg.epochs = 2;
  TrainingCurve a, b;
  const auto wa = TrainProbeModel(ds, cfg, &a);
  const auto wb = TrainProbeModel(ds, cfg, &b);
  EXPECT_EQ(CurvesCsv(a), CurvesCsv(b));
  EXPECT_EQ(mutt::SerializeCheckpoint(wa), mutt::SerializeCheckpoint(wb));
  EXPECT_EQ(CurvesCsv(a).substr(0, 17), "epoch,stage,loss\n");
}

TEST(TrainSearchModel, AllFailureDataGivesLowSuccess) {
  std::vector<sim::ExecutionRecord> fails;
  for (const auto& r : SmallDataset().train) {
    if (!r.trajectory.success) fails.push_back(r);
  }
  fails.resize(std::min<std::size_t>(fails.size(), 25));
  Dataset ds;
  ds.meta = SmallDataset().meta;
  ds.train = fails;
  ds.meta.stats = ComputeStats(fails, 25);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.search_epochs = 40;
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 5;
  mutt::ModelWeights w = TrainProbeModel(ds, cfg);
  TrainSearchModel(DistillProbePredictions(fails, w, ds.meta.stats), w, cfg,
                   mutt::ShadowConfig{});
  const mutt::MuttShadowProgram shadow(w, mutt::ShadowConfig{});
  for (const auto& r : fails) {
    EXPECT_LT(mutt::PredictSearch(shadow, r.params, r.image).p_success, 0.1);
  }
}

class AlwaysSuccess : public OutcomePredictor {
 public:
  PredictedOutcome Predict(const sim::ExecutionRecord& rec) const override {
    return {true, 1.0, rec.trajectory};
  }
};

TEST(EvaluateModels, GroundTruthPredictorIsPerfect) {
  const Evaluation e = EvaluateModels(GroundTruthPredictor(), SmallDataset().test);
  EXPECT_EQ(e.metrics.f1, 1.0);
  EXPECT_EQ(e.metrics.mae_L, 0.0);
  EXPECT_EQ(e.metrics.mae_P, 0.0);
  EXPECT_EQ(e.metrics.mae_F, 0.0);
  EXPECT_EQ(e.metrics.true_pos + e.metrics.true_neg, SmallDataset().test.size());
}

TEST(EvaluateModels, ConstantSuccessOnImbalancedSplit) {
  const Dataset ds = CollectDataset(sim::SimConfig{}, ParamDomain{}, 800, 3);
  std::vector<sim::ExecutionRecord> test;
  std::size_t succ = 0, fail = 0;
  for (const auto& r : ds.train) {
    if (r.trajectory.success && succ < 161) {
      test.push_back(r);
      ++succ;
    } else if (!r.trajectory.success && fail < 38) {
      test.push_back(r);
      ++fail;
    }
  }
  ASSERT_EQ(succ, 161u);
  ASSERT_EQ(fail, 38u);
  const Evaluation e = EvaluateModels(AlwaysSuccess(), test, 2);
  EXPECT_EQ(e.metrics.true_pos, 161u);
  EXPECT_EQ(e.metrics.false_pos, 38u);
  EXPECT_NEAR(e.metrics.f1, 322.0 / 360.0, 1e-12);
}

TEST(EvaluateModels, CsvHasOneRowPerRecord) {
  const Evaluation e = EvaluateModels(GroundTruthPredictor(), SmallDataset().test);
  const std::string csv = EvaluationCsv(e);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')),
            SmallDataset().test.size() + 1);
}

TEST(SummaryTable, ListsBothSplits) {
  const std::string t = SummaryTable(SmallDataset());
  EXPECT_NE(t.find("| # records | 96 | 24 |"), std::string::npos) << t;
  EXPECT_NE(t.find("mu_F"), std::string::npos);
}

}  // namespace
}  // namespace probeopt::train
