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
#include <random>

#include <benchmark/benchmark.h>

#include "probeopt/autodiff/ops.h"
#include "probeopt/mutt/model.h"
#include "probeopt/planner/planner.h"
#include "probeopt/simenv/simulator.h"
#include "probeopt/spi/optimizer.h"
#include "probeopt/training/dataset.h"

namespace probeopt {
namespace {

ad::Matrix Random(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  ad::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

void BM_MatMulBackward(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const ad::Matrix a = Random(n, n, 1), b = Random(n, n, 2);
  for (auto _ : state) {
    ad::Tape tape;
    ad::Var x = tape.Variable(a), y = tape.Variable(b);
    tape.Backward(ad::Sum(ad::MatMul(x, y)));
    benchmark::DoNotOptimize(tape.Grad(x).data());
  }
}
BENCHMARK(BM_MatMulBackward)->Arg(16)->Arg(64)->Arg(128);

void BM_AttentionBlockBackward(benchmark::State& state) {
  const ad::Matrix q = Random(64, 64, 3), k = Random(64, 64, 4);
  const ad::Matrix g = ad::Matrix::Ones(1, 64), b = ad::Matrix::Zero(1, 64);
  for (auto _ : state) {
    ad::Tape tape;
    ad::Var x = tape.Variable(q), y = tape.Variable(k);
    ad::Var att = ad::Softmax(ad::MatMul(x, ad::Transpose(y)) * 0.125, 1);
    ad::Var out = ad::LayerNorm(ad::MatMul(att, y), tape.Variable(g),
                                tape.Variable(b));
    tape.Backward(ad::Sum(ad::Gelu(out)));
    benchmark::DoNotOptimize(tape.Grad(x).data());
  }
}
BENCHMARK(BM_AttentionBlockBackward);

void BM_ExecuteProgram(benchmark::State& state) {
  const sim::SimConfig cfg;
  const sim::EnvState env = sim::SampleEnvironment(5, cfg);
  const TaskParams p = train::BaselineParams(ParamDomain{}, 20, 5);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::ExecuteProgram(env, p, ++seed, cfg));
  }
}
BENCHMARK(BM_ExecuteProgram);

void BM_RenderImage(benchmark::State& state) {
  const sim::SimConfig cfg;
  const sim::EnvState env = sim::SampleEnvironment(5, cfg);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::RenderImage(env, cfg, ++seed));
  }
}
BENCHMARK(BM_RenderImage);

void BM_ShadowForwardBackward(benchmark::State& state) {
  const sim::SimConfig cfg;
  const sim::EnvState env = sim::SampleEnvironment(5, cfg);
  const sim::EnvImage image = sim::RenderImage(env, cfg, 5);
  const TaskParams p = train::BaselineParams(
      ParamDomain{}, static_cast<int>(state.range(0)), 5);
  const mutt::ModelWeights w = mutt::InitWeights(mutt::ModelConfig{}, 1);
  const mutt::MuttShadowProgram shadow(w, mutt::ShadowConfigFor(cfg));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        spi::EvaluateObjective(p, image, shadow, spi::OptimizeOptions{}));
  }
}
BENCHMARK(BM_ShadowForwardBackward)->Arg(4)->Arg(20);

void BM_SearchPlan(benchmark::State& state) {
  const TaskParams p = train::BaselineParams(ParamDomain{}, 20, 5);
  const mutt::ShadowConfig sc = mutt::ShadowConfigFor(sim::SimConfig{});
  ad::Matrix pt(1, 3), pat(20, 2);
  pt << p.point_to.x, p.point_to.y, p.point_to.z;
  for (int k = 0; k < 20; ++k) pat.row(k) << p.pattern[k].dx, p.pattern[k].dy;
  for (auto _ : state) {
    ad::Tape tape;
    ad::Var a = tape.Variable(pt), b = tape.Variable(pat);
    const planner::SearchPlan plan =
        planner::ComposeSearchPlan(sc.home, a, b, p, sc.planner);
    tape.Backward(ad::Sum(plan.cumulative));
    benchmark::DoNotOptimize(tape.Grad(b).data());
  }
}
BENCHMARK(BM_SearchPlan);

}  // namespace
}  // namespace probeopt

BENCHMARK_MAIN();
