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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "probeopt/core/errors.h"
#include "probeopt/harness/commands.h"
#include "probeopt/harness/config.h"
#include "probeopt/harness/gradcheck_suite.h"
#include "probeopt/harness/pipeline.h"

namespace probeopt::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path Fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("probeopt_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json TinyConfig(const fs::path& root) {
  return {
      {"seed", 3},
      {"collect", {{"n", 25}, {"pattern_size", 20}}},
      {"model", {{"d_model", 16}, {"heads", 2}, {"ffn_hidden", 32},
                 {"layers", 1}}},
      {"train", {{"epochs", 1}, {"batch_size", 8}}},
      {"optimize", {{"steps", 3}, {"n_envs", 2}}},
      {"ablate", {{"sizes", {5, 10}}}},
      {"paths", {{"dataset", (root / "dataset").string()},
                 {"checkpoints", (root / "checkpoints").string()},
                 {"reports", (root / "reports").string()}}},
  };
}

fs::path WriteConfig(const fs::path& root, const json& j) {
  const fs::path p = root / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

int Invoke(const std::string& cmd, CommandFlags flags, std::string* out = nullptr,
        std::string* err = nullptr) {
  std::ostringstream o, e;
  const int code = RunCommand(cmd, flags, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

CommandFlags Flags(const fs::path& config) {
  CommandFlags f;
  f.config = config;
  return f;
}

TEST(Config, DefaultsRoundTrip) {
  const HarnessConfig d;
  EXPECT_NO_THROW(d.Validate());
  EXPECT_EQ(ToJson(HarnessConfigFromJson(ToJson(d))), ToJson(d));
  EXPECT_EQ(ToJson(HarnessConfigFromJson(json::object())), ToJson(d));
}

TEST(Config, OverlayChangesOnlyListedFields) {
  const HarnessConfig c = HarnessConfigFromJson(
      {{"train", {{"epochs", 7}}}, {"optimize", {{"w_c", 0.5}}}});
  EXPECT_EQ(c.train.epochs, 7);
  EXPECT_EQ(c.optimize.w_c, 0.5);
  EXPECT_EQ(c.optimize.w_s, HarnessConfig{}.optimize.w_s);
  EXPECT_EQ(c.collect_n, HarnessConfig{}.collect_n);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(HarnessConfigFromJson({{"sede", 1}}), InvalidArgument);
  EXPECT_THROW(HarnessConfigFromJson({{"train", {{"epoch", 1}}}}),
               InvalidArgument);
  EXPECT_THROW(HarnessConfigFromJson({{"optimize", {{"steps", 0}}}}),
               InvalidArgument);
  EXPECT_THROW(HarnessConfigFromJson({{"collect", {{"n", "many"}}}}),
               InvalidArgument);
}

TEST(Config, SeedEnvironmentOverride) {
  const fs::path root = Fresh("envseed");
  const fs::path cfg = WriteConfig(root, {{"seed", 4}});
  ::setenv("PROBEOPT_SEED", "77", 1);
  EXPECT_EQ(LoadHarnessConfig(cfg).seed, 77u);
  ::setenv("PROBEOPT_SEED", "x", 1);
  EXPECT_THROW(LoadHarnessConfig(cfg), InvalidArgument);
  ::unsetenv("PROBEOPT_SEED");
  EXPECT_EQ(LoadHarnessConfig(cfg).seed, 4u);
  EXPECT_EQ(LoadHarnessConfig(std::nullopt).seed, HarnessConfig{}.seed);
}

TEST(Config, FlagsOverrideFile) {
  const fs::path root = Fresh("flags");
  CommandFlags f = Flags(WriteConfig(root, TinyConfig(root)));
  f.n = 40;
  f.seed = 9;
  f.n_envs = 5;
  f.sizes = std::vector<std::size_t>{7};
  const HarnessConfig c = EffectiveConfig(f);
  EXPECT_EQ(c.collect_n, 40u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.n_envs, 5u);
  EXPECT_EQ(c.ablate_sizes, std::vector<std::size_t>{7});
}

TEST(RunCommand, UsageErrorsExitTwo) {
  const fs::path root = Fresh("usage");
  std::string err;
  EXPECT_EQ(Invoke("collect", Flags(root / "absent.json"), nullptr, &err),
            kExitUsage);
  EXPECT_FALSE(err.empty());
  const fs::path bad = WriteConfig(root, {{"bogus", true}});
  EXPECT_EQ(Invoke("collect", Flags(bad)), kExitUsage);
  EXPECT_EQ(Invoke("frobnicate", CommandFlags{}), kExitUsage);
  CommandFlags stage = Flags(WriteConfig(root, TinyConfig(root)));
  stage.stage = "middle";
  EXPECT_EQ(Invoke("train", stage), kExitUsage);
}

TEST(RunCommand, MissingInputsExitTwo) {
  const fs::path root = Fresh("missing");
  const CommandFlags f = Flags(WriteConfig(root, TinyConfig(root)));
  EXPECT_EQ(Invoke("train", f), kExitUsage);
  EXPECT_EQ(Invoke("eval", f), kExitUsage);
  EXPECT_EQ(Invoke("optimize", f), kExitUsage);
  ASSERT_EQ(Invoke("collect", f), kExitOk);
  CommandFlags search = f;
  search.stage = "search";
  EXPECT_EQ(Invoke("train", search), kExitUsage);
  CommandFlags big = f;
  big.sizes = std::vector<std::size_t>{1000};
  EXPECT_EQ(Invoke("ablate", big), kExitUsage);
}

TEST(RunCommand, PrintConfigDumpsEffectiveJson) {
  const fs::path root = Fresh("print");
  CommandFlags f = Flags(WriteConfig(root, TinyConfig(root)));
  f.print_config = true;
  f.seed = 12;
  std::string out;
  ASSERT_EQ(Invoke("collect", f, &out), kExitOk);
  const json j = json::parse(out);
  EXPECT_EQ(j["seed"], 12);
  EXPECT_EQ(j["collect"]["n"], 25);
  EXPECT_FALSE(fs::exists(root / "dataset"));
}

// Runs the full tool chain into `root` and returns the produced files.
std::map<std::string, std::string> RunChain(const fs::path& root) {
  const CommandFlags f = Flags(WriteConfig(root, TinyConfig(root)));
  EXPECT_EQ(Invoke("collect", f), kExitOk);
  EXPECT_EQ(Invoke("train", f), kExitOk);
  EXPECT_EQ(Invoke("eval", f), kExitOk);
  EXPECT_EQ(Invoke("optimize", f), kExitOk);
  EXPECT_EQ(Invoke("ablate", f), kExitOk);
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "config.json") {
      files[fs::relative(e.path(), root).string()] = Slurp(e.path());
    }
  }
  return files;
}

TEST(Commands, ReRunsAreByteIdentical) {
  const auto a = RunChain(Fresh("chain_a"));
  const auto b = RunChain(Fresh("chain_b"));
  ASSERT_FALSE(a.empty());
  for (const char* f :
       {"dataset/meta.json", "dataset/train.ndjson", "dataset/test.ndjson",
        "checkpoints/probe.ckpt", "checkpoints/search.ckpt",
        "checkpoints/curves.csv", "reports/prediction_metrics.csv",
        "reports/prediction_report.md", "reports/optimization_metrics.csv",
        "reports/optimization_report.md", "reports/ablation.csv"}) {
    ASSERT_TRUE(a.count(f)) << f;
  }
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, bytes] : a) {
    EXPECT_EQ(bytes, b.at(name)) << name;
  }
}

TEST(Commands, StagesCanRunSeparately) {
  const fs::path root = Fresh("stages");
  CommandFlags f = Flags(WriteConfig(root, TinyConfig(root)));
  ASSERT_EQ(Invoke("collect", f), kExitOk);
  f.stage = "probe";
  ASSERT_EQ(Invoke("train", f), kExitOk);
  EXPECT_TRUE(fs::exists(root / "checkpoints" / kProbeCheckpoint));
  EXPECT_FALSE(fs::exists(root / "checkpoints" / kSearchCheckpoint));
  f.stage = "search";
  ASSERT_EQ(Invoke("train", f), kExitOk);
  EXPECT_TRUE(fs::exists(root / "checkpoints" / kSearchCheckpoint));
}

TEST(Commands, OracleOptimizeFindsEveryHole) {
  const fs::path root = Fresh("oracle");
  CommandFlags f = Flags(WriteConfig(root, TinyConfig(root)));
  json j = TinyConfig(root);
  j["optimize"]["steps"] = 200;
  f.config = WriteConfig(root, j);
  f.oracle = true;
  f.n_envs = 4;
  ASSERT_EQ(Invoke("optimize", f), kExitOk);
  const std::string md = Slurp(root / "reports" / "optimization_report.md");
  EXPECT_NE(md.find("| SR [%] | 100.0 ("), std::string::npos) << md;
  EXPECT_NE(md.find("| # probes | 1.00 ("), std::string::npos) << md;
}

TEST(Commands, GradcheckPassesAndCatchesCorruptedRule) {
  const fs::path root = Fresh("gradcheck");
  CommandFlags f = Flags(WriteConfig(root, TinyConfig(root)));
  std::string out;
  EXPECT_EQ(Invoke("gradcheck", f, &out), kExitOk);
  EXPECT_NE(out.find("-> PASS"), std::string::npos);
  for (const char* op : {"matmul", "softmax", "layernorm"}) {
    f.corrupt_op = op;
    EXPECT_EQ(Invoke("gradcheck", f, &out), kExitFailure) << op;
    EXPECT_NE(out.find("-> FAIL"), std::string::npos);
  }
  f.corrupt_op = "nonsense";
  EXPECT_EQ(Invoke("gradcheck", f), kExitUsage);
  // The corruption hook is restored afterwards.
  EXPECT_FALSE(ad::testing::CorruptedBackwardRule().has_value());
}

TEST(GradCheckSuite, CoversEveryPrimitive) {
  const GradCheckReport r = RunGradCheckSuite(GradCheckOptions{});
  EXPECT_TRUE(r.pass());
  EXPECT_GE(r.instances(), 100u);
  std::set<std::string> names;
  for (const auto& e : r.entries) {
    if (e.suite == "primitive") names.insert(e.name.substr(0, e.name.find('/')));
  }
  for (const char* op :
       {"add", "sub", "mul", "div", "matmul", "transpose", "sum", "mean", "max",
        "exp", "log", "tanh", "sigmoid", "relu", "gelu", "softplus", "sqrt",
        "square", "sum_axis", "softmax", "layernorm", "concat", "slice", "embed_lookup",
        "add_row"}) {
    EXPECT_TRUE(names.count(op)) << op;
  }
  EXPECT_LE(r.max_error("end_to_end"), 1e-4);
}

TEST(Reports, UndefinedF1PrintsNan) {
  train::Evaluation e;
  e.metrics.f1 = std::numeric_limits<double>::quiet_NaN();
  const std::string csv = PredictionMetricsCsv(e);
  EXPECT_EQ(csv.rfind("f1,", 0), 0u) << csv;
  EXPECT_NE(csv.find("\nnan,"), std::string::npos) << csv;
}

}  // namespace
}  // namespace probeopt::harness
