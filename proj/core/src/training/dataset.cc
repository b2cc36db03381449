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
#include "probeopt/training/dataset.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "probeopt/core/errors.h"
#include "probeopt/core/parallel.h"
#include "probeopt/core/program.h"
#include "probeopt/core/trajectory.h"
#include "probeopt/simenv/record_io.h"
#include "probeopt/training/targets.h"

namespace probeopt::train {
namespace {

using nlohmann::json;

double Draw(std::mt19937_64& rng, const Range& r) {
  if (r.min == r.max) return r.min;
  return std::uniform_real_distribution<double>(r.min, r.max)(rng);
}

json VecJson(const Eigen::RowVectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::RowVectorXd VecFromJson(const json& j, Eigen::Index n) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != n) {
    throw LoadError("normalization vector has the wrong size");
  }
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), n);
}

json StatsJson(const mutt::Normalization& n) {
  return {{"pixel_mean", n.pixel_mean},
          {"pixel_scale", n.pixel_scale},
          {"context_mean", VecJson(n.context_mean)},
          {"context_scale", VecJson(n.context_scale)},
          {"z_mean", n.z_mean},
          {"z_scale", n.z_scale},
          {"fz_mean", n.fz_mean},
          {"fz_scale", n.fz_scale},
          {"duration_mean", n.duration_mean},
          {"duration_scale", n.duration_scale},
          {"depth_mean", n.depth_mean},
          {"depth_scale", n.depth_scale}};
}

mutt::Normalization StatsFromJson(const json& j) {
  mutt::Normalization n;
  n.pixel_mean = j.at("pixel_mean").get<double>();
  n.pixel_scale = j.at("pixel_scale").get<double>();
  n.context_mean = VecFromJson(j.at("context_mean"), mutt::kContextDim);
  n.context_scale = VecFromJson(j.at("context_scale"), mutt::kContextDim);
  n.z_mean = j.at("z_mean").get<double>();
  n.z_scale = j.at("z_scale").get<double>();
  n.fz_mean = j.at("fz_mean").get<double>();
  n.fz_scale = j.at("fz_scale").get<double>();
  n.duration_mean = j.at("duration_mean").get<double>();
  n.duration_scale = j.at("duration_scale").get<double>();
  n.depth_mean = j.at("depth_mean").get<double>();
  n.depth_scale = j.at("depth_scale").get<double>();
  return n;
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<sim::ExecutionRecord> ReadRecords(const std::filesystem::path& p,
                                              const sim::SimConfig& cfg) {
  std::ifstream f(p);
  if (!f) throw LoadError("cannot open " + p.string());
  std::vector<sim::ExecutionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(sim::RecordFromJson(json::parse(line), cfg));
    } catch (const json::exception& e) {
      throw LoadError(p.string() + ":" + std::to_string(lineno) + ": " +
                      e.what());
    }
  }
  return out;
}

std::string Records(const std::vector<sim::ExecutionRecord>& recs) {
  std::string out;
  for (const auto& r : recs) {
    out += sim::RecordToJson(r).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

std::uint64_t EpisodeSeed(std::uint64_t base, std::size_t episode) {
  return sim::StreamSeed(base, 0x10000 + static_cast<std::uint64_t>(episode));
}

std::size_t TestCount(std::size_t n, std::size_t test_size) {
  return n > test_size ? test_size : n / 5;
}

TaskParams SampleTaskParams(const ParamDomain& domain, int pattern_size,
                            std::uint64_t seed) {
  if (pattern_size < 1) throw InvalidArgument("pattern_size must be >= 1");
  std::mt19937_64 rng(sim::StreamSeed(seed, 4));
  TaskParams p;
  p.point_to = {Draw(rng, domain.point_to_x), Draw(rng, domain.point_to_y),
                Draw(rng, domain.point_to_z)};
  p.pattern.resize(static_cast<std::size_t>(pattern_size));
  for (auto& o : p.pattern) {
    o.dx = Draw(rng, domain.pattern_dx);
    o.dy = Draw(rng, domain.pattern_dy);
  }
  p.v_lateral = Draw(rng, domain.v_lateral);
  p.v_descent = Draw(rng, domain.v_descent);
  p.accel = Draw(rng, domain.accel);
  p.f_contact = Draw(rng, domain.f_contact);
  return p;
}

TaskParams BaselineParams(const ParamDomain& domain, int pattern_size,
                          std::uint64_t seed) {
  std::mt19937_64 rng(sim::StreamSeed(seed, 4));
  TaskParams p;
  p.point_to = {Draw(rng, domain.point_to_x), Draw(rng, domain.point_to_y),
                Draw(rng, domain.point_to_z)};
  p.pattern = NominalGridPattern(static_cast<std::size_t>(pattern_size), 1.0);
  return domain.Project(p);
}

std::string ConfigHash(const sim::SimConfig& cfg, const ParamDomain& domain) {
  const std::string text =
      json{{"sim", sim::ToJson(cfg)}, {"domain", ToJson(domain)}}.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

Dataset CollectDataset(const sim::SimConfig& cfg, const ParamDomain& domain,
                       std::size_t n, std::uint64_t seed,
                       const CollectOptions& opts) {
  if (n < 1) throw InvalidArgument("collect: n must be >= 1");
  cfg.Validate();
  domain.Validate();
  std::vector<sim::ExecutionRecord> all(n);
  ParallelFor(n, opts.threads, [&](std::size_t i) {
    const std::uint64_t s = EpisodeSeed(seed, i);
    const sim::EnvState env = sim::SampleEnvironment(s, cfg);
    const TaskParams params = SampleTaskParams(domain, opts.pattern_size, s);
    all[i] = sim::ExecuteProgram(env, params, s, cfg);
    all[i].image = sim::RenderImage(env, cfg, s);
  });
  Dataset ds;
  ds.meta.sim = cfg;
  ds.meta.domain = domain;
  ds.meta.seed = seed;
  ds.meta.n_test = TestCount(n, opts.test_size);
  ds.meta.n_train = n - ds.meta.n_test;
  ds.meta.pattern_size = opts.pattern_size;
  ds.meta.profile_len = opts.profile_len;
  ds.meta.config_hash = ConfigHash(cfg, domain);
  ds.train.assign(all.begin(), all.begin() + ds.meta.n_train);
  ds.test.assign(all.begin() + ds.meta.n_train, all.end());
  ds.meta.stats = ComputeStats(ds.train, opts.profile_len);
  return ds;
}

Dataset TrainPrefix(const Dataset& ds, std::size_t n_train) {
  if (n_train < 1 || n_train > ds.train.size()) {
    throw InvalidArgument("subset size " + std::to_string(n_train) +
                          " exceeds the " + std::to_string(ds.train.size()) +
                          " training records");
  }
  Dataset out;
  out.meta = ds.meta;
  out.meta.n_train = n_train;
  out.train.assign(ds.train.begin(), ds.train.begin() + n_train);
  out.test = ds.test;
  out.meta.stats = ComputeStats(out.train, ds.meta.profile_len);
  return out;
}

void SaveDataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::uint64_t first_test = ds.meta.n_train;
  json meta = {
      {"format", "probeopt-dataset-1"},
      {"config_hash", ds.meta.config_hash},
      {"seed", ds.meta.seed},
      {"episodes", ds.meta.n_train + ds.meta.n_test},
      {"train_episodes", json::array({0, first_test})},
      {"test_episodes", json::array({first_test, first_test + ds.meta.n_test})},
      {"pattern_size", ds.meta.pattern_size},
      {"profile_len", ds.meta.profile_len},
      {"sim", sim::ToJson(ds.meta.sim)},
      {"domain", ToJson(ds.meta.domain)},
      {"stats", StatsJson(ds.meta.stats)}};
  WriteFile(dir / "meta.json", meta.dump(2) + "\n");
  WriteFile(dir / "train.ndjson", Records(ds.train));
  WriteFile(dir / "test.ndjson", Records(ds.test));
}

Dataset LoadDataset(const std::filesystem::path& dir) {
  std::ifstream f(dir / "meta.json");
  if (!f) throw LoadError("no dataset at " + dir.string() + " (meta.json)");
  Dataset ds;
  try {
    const json meta = json::parse(f);
    ds.meta.sim = sim::SimConfigFromJson(meta.at("sim"));
    ds.meta.domain = ParamDomainFromJson(meta.at("domain"));
    ds.meta.seed = meta.at("seed").get<std::uint64_t>();
    ds.meta.pattern_size = meta.at("pattern_size").get<int>();
    ds.meta.profile_len = meta.at("profile_len").get<int>();
    ds.meta.config_hash = meta.at("config_hash").get<std::string>();
    ds.meta.stats = StatsFromJson(meta.at("stats"));
    const auto tr = meta.at("train_episodes").get<std::vector<std::size_t>>();
    const auto te = meta.at("test_episodes").get<std::vector<std::size_t>>();
    if (tr.size() != 2 || te.size() != 2 || tr[1] > te[0]) {
      throw LoadError("meta.json: overlapping or malformed episode ranges");
    }
    ds.meta.n_train = tr[1] - tr[0];
    ds.meta.n_test = te[1] - te[0];
  } catch (const json::exception& e) {
    throw LoadError("meta.json: " + std::string(e.what()));
  } catch (const InvalidArgument& e) {
    throw LoadError("meta.json: " + std::string(e.what()));
  }
  if (ds.meta.config_hash != ConfigHash(ds.meta.sim, ds.meta.domain)) {
    throw LoadError("meta.json: config hash does not match its settings");
  }
  ds.train = ReadRecords(dir / "train.ndjson", ds.meta.sim);
  ds.test = ReadRecords(dir / "test.ndjson", ds.meta.sim);
  if (ds.train.size() != ds.meta.n_train || ds.test.size() != ds.meta.n_test) {
    throw LoadError("dataset record counts disagree with meta.json");
  }
  return ds;
}

SplitSummary Summarize(const std::vector<sim::ExecutionRecord>& records) {
  SplitSummary s;
  s.count = records.size();
  if (records.empty()) return s;
  double sl = 0.0, sl2 = 0.0, sf = 0.0, sf2 = 0.0, probes = 0.0;
  std::size_t points = 0;
  for (const auto& r : records) {
    (r.trajectory.success ? s.success : s.fail)++;
    const auto len = static_cast<double>(r.trajectory.size());
    sl += len;
    sl2 += len * len;
    probes += static_cast<double>(r.probe_count());
    for (const auto& p : r.trajectory.points) {
      sf += p.fz;
      sf2 += p.fz * p.fz;
    }
    points += r.trajectory.size();
  }
  const auto n = static_cast<double>(records.size());
  s.mean_length = sl / n;
  s.std_length = std::sqrt(std::max(0.0, sl2 / n - s.mean_length * s.mean_length));
  s.mean_force = sf / static_cast<double>(points);
  s.std_force = std::sqrt(
      std::max(0.0, sf2 / static_cast<double>(points) -
                        s.mean_force * s.mean_force));
  s.mean_probes = probes / n;
  return s;
}

std::string SummaryTable(const Dataset& ds) {
  const SplitSummary tr = Summarize(ds.train);
  const SplitSummary te = Summarize(ds.test);
  auto row = [](const char* name, const std::string& a, const std::string& b) {
    return std::string("| ") + name + " | " + a + " | " + b + " |\n";
  };
  auto fmt = [](double m, double s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f (%.1f)", m, s);
    return std::string(buf);
  };
  auto fmt2 = [](double m, double s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", m, s);
    return std::string(buf);
  };
  std::string out = "| metric | train | test |\n|---|---|---|\n";
  out += row("# records", std::to_string(tr.count), std::to_string(te.count));
  out += row("succ (fail)",
             std::to_string(tr.success) + " (" + std::to_string(tr.fail) + ")",
             std::to_string(te.success) + " (" + std::to_string(te.fail) + ")");
  out += row("mu_L (sigma_L) [points]", fmt(tr.mean_length, tr.std_length),
             fmt(te.mean_length, te.std_length));
  out += row("mu_F (sigma_F) [N]", fmt2(tr.mean_force, tr.std_force),
             fmt2(te.mean_force, te.std_force));
  auto one = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };
  out += row("mean probes", one(tr.mean_probes), one(te.mean_probes));
  return out;
}

}  // namespace probeopt::train
