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
#include "probeopt/harness/config.h"

#include <cstdlib>
#include <fstream>
#include <set>

#include "probeopt/core/errors.h"
#include "probeopt/core/program.h"
#include "probeopt/mutt/weights.h"
#include "probeopt/simenv/record_io.h"

namespace probeopt::harness {
namespace {

using nlohmann::json;

void OnlyKeys(const json& j, const char* section,
              std::initializer_list<const char*> keys) {
  if (!j.is_object()) {
    throw InvalidArgument(std::string("config section '") + section +
                          "' must be an object");
  }
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) {
      throw InvalidArgument(std::string("config: unknown key '") + section +
                            "." + k + "'");
    }
  }
}

template <typename T>
void Get(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(dst);
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("config: bad value for '") + key + "'");
  }
}

}  // namespace

void HarnessConfig::Validate() const {
  sim.Validate();
  domain.Validate();
  train.Validate();
  optimize.Validate();
  if (threads < 1) throw InvalidArgument("config: threads must be >= 1");
  if (collect_n < 1) throw InvalidArgument("config: collect.n must be >= 1");
  if (pattern_size < 1 || pattern_size > train.model.max_probes) {
    throw InvalidArgument("config: collect.pattern_size must be in 1.." +
                          std::to_string(train.model.max_probes));
  }
  if (train.model.image_height != sim.image_height ||
      train.model.image_width != sim.image_width) {
    throw InvalidArgument("config: model image size differs from sim image");
  }
  if (n_envs < 1) throw InvalidArgument("config: optimize.n_envs must be >= 1");
  for (std::size_t s : ablate_sizes) {
    if (s < 1) throw InvalidArgument("config: ablate sizes must be >= 1");
  }
}

json ToJson(const HarnessConfig& c) {
  const train::TrainConfig& t = c.train;
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"sim", sim::ToJson(c.sim)},
          {"domain", ToJson(c.domain)},
          {"model", mutt::ToJson(t.model)},
          {"collect",
           {{"n", c.collect_n},
            {"test_size", c.test_size},
            {"pattern_size", c.pattern_size}}},
          {"train",
           {{"epochs", t.epochs},
            {"search_epochs", t.search_epochs},
            {"learning_rate", t.learning_rate},
            {"batch_size", t.batch_size},
            {"probe_bce_weight", t.probe_bce_weight},
            {"success_bce_weight", t.success_bce_weight},
            {"length_weight", t.length_weight},
            {"grad_clip", t.grad_clip}}},
          {"optimize",
           {{"steps", c.optimize.steps},
            {"learning_rate", c.optimize.learning_rate},
            {"w_s", c.optimize.w_s},
            {"w_c", c.optimize.w_c},
            {"n_envs", c.n_envs}}},
          {"ablate", {{"sizes", c.ablate_sizes}}},
          {"paths",
           {{"dataset", c.paths.dataset.string()},
            {"checkpoints", c.paths.checkpoints.string()},
            {"reports", c.paths.reports.string()}}}};
}

HarnessConfig HarnessConfigFromJson(const json& j) {
  OnlyKeys(j, "<root>",
           {"seed", "threads", "sim", "domain", "model", "collect", "train",
            "optimize", "ablate", "paths"});
  HarnessConfig c;
  Get(j, "seed", c.seed);
  Get(j, "threads", c.threads);
  try {
    if (j.contains("sim")) c.sim = sim::SimConfigFromJson(j.at("sim"));
    if (j.contains("domain")) {
      c.domain = ParamDomainFromJson(j.at("domain"));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (j.contains("model")) {
    c.train.model = mutt::ModelConfigFromJson(j.at("model"));
  }
  if (j.contains("collect")) {
    const json& s = j.at("collect");
    OnlyKeys(s, "collect", {"n", "test_size", "pattern_size"});
    Get(s, "n", c.collect_n);
    Get(s, "test_size", c.test_size);
    Get(s, "pattern_size", c.pattern_size);
  }
  if (j.contains("train")) {
    const json& s = j.at("train");
    OnlyKeys(s, "train",
             {"epochs", "search_epochs", "learning_rate", "batch_size",
              "probe_bce_weight", "success_bce_weight", "length_weight",
              "grad_clip"});
    Get(s, "epochs", c.train.epochs);
    Get(s, "search_epochs", c.train.search_epochs);
    Get(s, "learning_rate", c.train.learning_rate);
    Get(s, "batch_size", c.train.batch_size);
    Get(s, "probe_bce_weight", c.train.probe_bce_weight);
    Get(s, "success_bce_weight", c.train.success_bce_weight);
    Get(s, "length_weight", c.train.length_weight);
    Get(s, "grad_clip", c.train.grad_clip);
  }
  if (j.contains("optimize")) {
    const json& s = j.at("optimize");
    OnlyKeys(s, "optimize", {"steps", "learning_rate", "w_s", "w_c", "n_envs"});
    Get(s, "steps", c.optimize.steps);
    Get(s, "learning_rate", c.optimize.learning_rate);
    Get(s, "w_s", c.optimize.w_s);
    Get(s, "w_c", c.optimize.w_c);
    Get(s, "n_envs", c.n_envs);
  }
  if (j.contains("ablate")) {
    const json& s = j.at("ablate");
    OnlyKeys(s, "ablate", {"sizes"});
    Get(s, "sizes", c.ablate_sizes);
  }
  if (j.contains("paths")) {
    const json& s = j.at("paths");
    OnlyKeys(s, "paths", {"dataset", "checkpoints", "reports"});
    std::string v;
    if (s.contains("dataset")) {
      Get(s, "dataset", v);
      c.paths.dataset = v;
    }
    if (s.contains("checkpoints")) {
      Get(s, "checkpoints", v);
      c.paths.checkpoints = v;
    }
    if (s.contains("reports")) {
      Get(s, "reports", v);
      c.paths.reports = v;
    }
  }
  c.train.seed = c.seed;
  c.Validate();
  return c;
}

HarnessConfig LoadHarnessConfig(
    const std::optional<std::filesystem::path>& p) {
  json j = json::object();
  if (p) {
    std::ifstream f(*p);
    if (!f) throw InvalidArgument("cannot read config " + p->string());
    try {
      j = json::parse(f);
    } catch (const json::exception& e) {
      throw InvalidArgument("config " + p->string() + ": " + e.what());
    }
  }
  if (const char* env = std::getenv("PROBEOPT_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      throw InvalidArgument("PROBEOPT_SEED must be an unsigned integer");
    }
    j["seed"] = v;
  }
  return HarnessConfigFromJson(j);
}

}  // namespace probeopt::harness
