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
#include "probeopt/harness/commands.h"

#include <fstream>
#include <sstream>

#include "probeopt/autodiff/tape.h"
#include "probeopt/core/errors.h"
#include "probeopt/harness/gradcheck_suite.h"
#include "probeopt/harness/pipeline.h"
#include "probeopt/mutt/model.h"

namespace probeopt::harness {
namespace {

namespace fs = std::filesystem;

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::string ReadFileIfExists(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return {};
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

train::Dataset LoadInputDataset(const HarnessConfig& cfg) {
  if (!fs::exists(cfg.paths.dataset / "meta.json")) {
    throw LoadError("no dataset at " + cfg.paths.dataset.string() +
                    " (run collect first)");
  }
  return train::LoadDataset(cfg.paths.dataset);
}

mutt::ModelWeights LoadInputCheckpoint(const HarnessConfig& cfg,
                                       const char* name, const char* hint) {
  const fs::path p = cfg.paths.checkpoints / name;
  if (!fs::exists(p)) {
    throw LoadError("no checkpoint at " + p.string() + " (" + hint + ")");
  }
  return mutt::LoadCheckpoint(p);
}

Logger StreamLogger(std::ostream& out) {
  return [&out](const std::string& msg) { out << msg << "\n" << std::flush; };
}

// curves.csv joins the per-stage curves that exist, probe stage first.
void WriteMergedCurves(const fs::path& dir) {
  std::string merged = "epoch,stage,loss\n";
  for (const char* stage : {"probe", "search"}) {
    const std::string text =
        ReadFileIfExists(dir / ("curves_" + std::string(stage) + ".csv"));
    const auto eol = text.find('\n');
    if (eol != std::string::npos) merged += text.substr(eol + 1);
  }
  WriteFile(dir / "curves.csv", merged);
}

}  // namespace

HarnessConfig EffectiveConfig(const CommandFlags& flags) {
  HarnessConfig cfg = LoadHarnessConfig(flags.config);
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.train.seed = *flags.seed;
  }
  if (flags.n) cfg.collect_n = *flags.n;
  if (flags.out) cfg.paths.dataset = *flags.out;
  if (flags.n_envs) cfg.n_envs = *flags.n_envs;
  if (flags.sizes) cfg.ablate_sizes = *flags.sizes;
  cfg.Validate();
  return cfg;
}

int CmdCollect(const HarnessConfig& cfg, std::ostream& out) {
  const train::Dataset ds = CollectStage(cfg);
  const std::string summary = train::SummaryTable(ds);
  EnsureDir(cfg.paths.dataset);
  train::SaveDataset(ds, cfg.paths.dataset);
  WriteFile(cfg.paths.dataset / "summary.md", summary);
  out << summary;
  return kExitOk;
}

int CmdTrain(const HarnessConfig& cfg, std::string_view stage,
             std::ostream& out) {
  if (stage != "probe" && stage != "search" && stage != "both") {
    throw InvalidArgument("--stage must be probe, search or both");
  }
  const train::Dataset ds = LoadInputDataset(cfg);
  const fs::path dir = cfg.paths.checkpoints;
  const Logger log = StreamLogger(out);

  mutt::ModelWeights w;
  train::TrainingCurve probe_curve, search_curve;
  if (stage == "search") {
    w = LoadInputCheckpoint(cfg, kProbeCheckpoint, "run --stage probe first");
  } else {
    w = TrainProbeStage(ds, cfg, &probe_curve, log);
  }
  if (stage != "probe") TrainSearchStage(ds, cfg, w, &search_curve, log);

  EnsureDir(dir);
  if (stage != "search") {
    mutt::SaveCheckpoint(w, dir / kProbeCheckpoint);
    WriteFile(dir / "curves_probe.csv", train::CurvesCsv(probe_curve));
  }
  if (stage != "probe") {
    mutt::SaveCheckpoint(w, dir / kSearchCheckpoint);
    WriteFile(dir / "curves_search.csv", train::CurvesCsv(search_curve));
  }
  WriteMergedCurves(dir);
  out << "checkpoints written to " << dir.string() << "\n";
  return kExitOk;
}

int CmdEval(const HarnessConfig& cfg, bool oracle, std::ostream& out) {
  const train::Dataset ds = LoadInputDataset(cfg);
  train::Evaluation e;
  if (oracle) {
    e = EvaluatePredictions(train::GroundTruthPredictor(), ds, cfg);
  } else {
    const mutt::ModelWeights w =
        LoadInputCheckpoint(cfg, kSearchCheckpoint, "run train first");
    e = EvaluatePredictions(
        train::MuttPredictor(w, mutt::ShadowConfigFor(cfg.sim)), ds, cfg);
  }
  const std::string report = std::string("# Prediction on ") +
                             std::to_string(ds.test.size()) +
                             " held-out records (" +
                             (oracle ? "oracle" : "learned model") + ")\n\n" +
                             PredictionMarkdown(e);
  const fs::path dir = cfg.paths.reports;
  EnsureDir(dir);
  WriteFile(dir / "prediction_metrics.csv", PredictionMetricsCsv(e));
  WriteFile(dir / "prediction_records.csv", train::EvaluationCsv(e));
  WriteFile(dir / "prediction_report.md", report);
  out << report;
  return kExitOk;
}

int CmdOptimize(const HarnessConfig& cfg, bool oracle, std::ostream& out) {
  spi::OptimizationReport r;
  if (oracle) {
    r = OptimizeWithOracle(cfg);
  } else {
    const mutt::ModelWeights w =
        LoadInputCheckpoint(cfg, kSearchCheckpoint, "run train first");
    r = OptimizeWithModel(w, cfg);
  }
  const std::string report =
      std::string("# Optimization on ") + std::to_string(cfg.n_envs) +
      " unseen environments (" + (oracle ? "oracle" : "learned model") +
      ")\n\n" + spi::OptimizationMarkdown(r.metrics);
  const fs::path dir = cfg.paths.reports;
  EnsureDir(dir);
  WriteFile(dir / "optimization_metrics.csv", spi::OptimizationCsv(r));
  WriteFile(dir / "optimization_report.md", report);
  out << report;
  return kExitOk;
}

int CmdAblate(const HarnessConfig& cfg, std::ostream& out) {
  const train::Dataset ds = LoadInputDataset(cfg);
  const auto rows = RunAblation(ds, cfg, cfg.ablate_sizes, StreamLogger(out));
  const std::string table = AblationMarkdown(rows);
  const fs::path dir = cfg.paths.reports;
  EnsureDir(dir);
  WriteFile(dir / "ablation.csv", AblationCsv(rows));
  WriteFile(dir / "ablation.md", table);
  out << table;
  return kExitOk;
}

int CmdGradcheck(const HarnessConfig& cfg,
                 const std::optional<std::string>& corrupt_op,
                 std::ostream& out) {
  if (corrupt_op) {
    const auto op = ad::OpFromName(*corrupt_op);
    if (!op) throw InvalidArgument("unknown op '" + *corrupt_op + "'");
    ad::testing::CorruptBackwardRule(op);
  }
  GradCheckOptions opts;
  opts.seed = cfg.seed;
  GradCheckReport r;
  try {
    r = RunGradCheckSuite(opts);
  } catch (...) {
    ad::testing::CorruptBackwardRule(std::nullopt);
    throw;
  }
  ad::testing::CorruptBackwardRule(std::nullopt);
  out << FormatGradCheck(r);
  return r.pass() ? kExitOk : kExitFailure;
}

int RunCommand(std::string_view command, const CommandFlags& flags,
               std::ostream& out, std::ostream& err) {
  try {
    const HarnessConfig cfg = EffectiveConfig(flags);
    if (flags.print_config) {
      out << ToJson(cfg).dump(2) << "\n";
      return kExitOk;
    }
    if (command == "collect") return CmdCollect(cfg, out);
    if (command == "train") return CmdTrain(cfg, flags.stage, out);
    if (command == "eval") return CmdEval(cfg, flags.oracle, out);
    if (command == "optimize") return CmdOptimize(cfg, flags.oracle, out);
    if (command == "ablate") return CmdAblate(cfg, out);
    if (command == "gradcheck") {
      return CmdGradcheck(cfg, flags.corrupt_op, out);
    }
    err << "error: unknown command '" << command << "'\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const LoadError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace probeopt::harness
