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
#include "probeopt/harness/gradcheck_suite.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "probeopt/autodiff/gradcheck.h"
#include "probeopt/autodiff/ops.h"
#include "probeopt/mutt/model.h"
#include "probeopt/planner/planner.h"
#include "probeopt/spi/optimizer.h"

namespace probeopt::harness {
namespace {

using ad::Matrix;
using ad::Tape;
using ad::Var;

constexpr double kEps = 1e-6;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  int Int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(gen_);
  }
  Matrix Mat(int r, int c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Uniform(lo, hi);
    return m;
  }
  // Values bounded away from zero, random sign.
  Matrix AwayFromZero(int r, int c) {
    Matrix m = Mat(r, c, 0.3, 1.5);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (Uniform(0.0, 1.0) < 0.5) m.data()[i] = -m.data()[i];
    }
    return m;
  }

 private:
  std::mt19937_64 gen_;
};

// Contracts a node with fixed random weights so every output entry matters.
Var Project(Tape& tape, Var y, const Matrix& w) {
  return ad::Sum(ad::Mul(y, tape.Constant(w)));
}

struct Case {
  std::string name;
  // Builds one random instance: input and scalar function.
  std::function<std::pair<Matrix, ad::ScalarFunction>(Rng&)> make;
};

std::vector<Case> PrimitiveCases() {
  std::vector<Case> c;
  auto unary = [&](std::string name, std::function<Var(Var)> op,
                   std::function<Matrix(Rng&, int, int)> input) {
    c.push_back({name, [op, input](Rng& rng) {
                   const int r = rng.Int(1, 4), k = rng.Int(1, 4);
                   Matrix x = input(rng, r, k);
                   Matrix w = rng.Mat(r, k);
                   ad::ScalarFunction f = [op, w](Tape& t, Var v) {
                     return Project(t, op(v), w);
                   };
                   return std::make_pair(x, f);
                 }});
  };
  auto any = [](Rng& rng, int r, int k) { return rng.Mat(r, k, -2.0, 2.0); };
  auto away = [](Rng& rng, int r, int k) { return rng.AwayFromZero(r, k); };
  auto pos = [](Rng& rng, int r, int k) { return rng.Mat(r, k, 0.2, 3.0); };

  // Binary ops, differentiated w.r.t. either side.
  using Bin = std::function<Var(Var, Var)>;
  auto binary = [&](std::string name, Bin op, bool rhs_away) {
    for (int side = 0; side < 2; ++side) {
      c.push_back({name + (side ? "/rhs" : "/lhs"),
                   [op, side, rhs_away](Rng& rng) {
                     const int r = rng.Int(1, 4), k = rng.Int(1, 4);
                     Matrix a = rng.Mat(r, k, -2.0, 2.0);
                     Matrix b = rhs_away ? rng.AwayFromZero(r, k)
                                         : rng.Mat(r, k, -2.0, 2.0);
                     Matrix w = rng.Mat(r, k);
                     ad::ScalarFunction f = [=](Tape& t, Var v) {
                       Var l = side == 0 ? v : t.Constant(a);
                       Var rr = side == 1 ? v : t.Constant(b);
                       return Project(t, op(l, rr), w);
                     };
                     return std::make_pair(side == 0 ? a : b, f);
                   }});
    }
  };
  binary("add", [](Var a, Var b) { return ad::Add(a, b); }, false);
  binary("sub", [](Var a, Var b) { return ad::Sub(a, b); }, false);
  binary("mul", [](Var a, Var b) { return ad::Mul(a, b); }, false);
  binary("div", [](Var a, Var b) { return ad::Div(a, b); }, true);

  // Scalar broadcasting: the 1x1 operand is the variable.
  c.push_back({"mul/broadcast", [](Rng& rng) {
                 const Matrix m = rng.Mat(3, 2);
                 const Matrix w = rng.Mat(3, 2);
                 ad::ScalarFunction f = [=](Tape& t, Var v) {
                   return Project(t, ad::Mul(t.Constant(m), v), w);
                 };
                 return std::make_pair(rng.Mat(1, 1), f);
               }});
  c.push_back({"div/broadcast", [](Rng& rng) {
                 const Matrix m = rng.Mat(2, 3);
                 const Matrix w = rng.Mat(2, 3);
                 ad::ScalarFunction f = [=](Tape& t, Var v) {
                   return Project(t, ad::Div(t.Constant(m), v), w);
                 };
                 return std::make_pair(rng.AwayFromZero(1, 1), f);
               }});
  for (int side = 0; side < 2; ++side) {
    c.push_back({side ? "matmul/rhs" : "matmul/lhs", [side](Rng& rng) {
                   const int n = rng.Int(1, 4), k = rng.Int(1, 4),
                             m = rng.Int(1, 4);
                   const Matrix a = rng.Mat(n, k), b = rng.Mat(k, m);
                   const Matrix w = rng.Mat(n, m);
                   ad::ScalarFunction f = [=](Tape& t, Var v) {
                     Var l = side == 0 ? v : t.Constant(a);
                     Var r = side == 1 ? v : t.Constant(b);
                     return Project(t, ad::MatMul(l, r), w);
                   };
                   return std::make_pair(side == 0 ? a : b, f);
                 }});
  }
  c.push_back({"transpose", [](Rng& rng) {
                 const int r = rng.Int(1, 4), k = rng.Int(1, 4);
                 const Matrix w = rng.Mat(k, r);
                 ad::ScalarFunction f = [=](Tape& t, Var v) {
                   return Project(t, ad::Transpose(v), w);
                 };
                 return std::make_pair(rng.Mat(r, k), f);
               }});
  unary("sum", [](Var v) { return ad::Sum(v) * ad::Sum(v); }, any);
  for (int axis = 0; axis < 2; ++axis) {
    c.push_back({"sum_axis/" + std::to_string(axis), [axis](Rng& rng) {
                   const int r = rng.Int(1, 4), k = rng.Int(1, 4);
                   const Matrix w = axis == 0 ? rng.Mat(1, k) : rng.Mat(r, 1);
                   ad::ScalarFunction f = [=](Tape& t, Var v) {
                     return Project(t, ad::Sum(v, axis), w);
                   };
                   return std::make_pair(rng.Mat(r, k), f);
                 }});
  }
  unary("mean", [](Var v) { return ad::Square(ad::Mean(v)); }, any);
  c.push_back({"max", [](Rng& rng) {
                 // Distinct entries so the maximum is unique and stable.
                 const int r = rng.Int(1, 3), k = rng.Int(1, 3);
                 Matrix x(r, k);
                 for (Eigen::Index i = 0; i < x.size(); ++i) {
                   x.data()[i] = 0.5 * static_cast<double>(i) +
                                 rng.Uniform(0.0, 0.1);
                 }
                 std::shuffle(x.data(), x.data() + x.size(),
                              std::mt19937_64(rng.Int(0, 1 << 20)));
                 ad::ScalarFunction f = [](Tape&, Var v) {
                   return ad::Square(ad::Max(v));
                 };
                 return std::make_pair(x, f);
               }});
  unary("exp", [](Var v) { return ad::Exp(v); }, any);
  unary("log", [](Var v) { return ad::Log(v); }, pos);
  unary("tanh", [](Var v) { return ad::Tanh(v); }, any);
  unary("sigmoid", [](Var v) { return ad::Sigmoid(v); }, any);
  unary("relu", [](Var v) { return ad::Relu(v); }, away);
  unary("gelu", [](Var v) { return ad::Gelu(v); }, any);
  unary("softplus", [](Var v) { return ad::Softplus(v); }, any);
  unary("sqrt", [](Var v) { return ad::Sqrt(v); }, pos);
  unary("square", [](Var v) { return ad::Square(v); }, any);
  unary("softmax/rows", [](Var v) { return ad::Softmax(v, 1); }, any);
  unary("softmax/cols", [](Var v) { return ad::Softmax(v, 0); }, any);
  for (int which = 0; which < 3; ++which) {
    static const char* names[] = {"layernorm/x", "layernorm/gain",
                                  "layernorm/bias"};
    c.push_back({names[which], [which](Rng& rng) {
                   const int r = rng.Int(1, 3), k = rng.Int(2, 5);
                   const Matrix x = rng.Mat(r, k, -2.0, 2.0);
                   const Matrix g = rng.Mat(1, k, 0.5, 1.5);
                   const Matrix b = rng.Mat(1, k);
                   const Matrix w = rng.Mat(r, k);
                   ad::ScalarFunction f = [=](Tape& t, Var v) {
                     Var xx = which == 0 ? v : t.Constant(x);
                     Var gg = which == 1 ? v : t.Constant(g);
                     Var bb = which == 2 ? v : t.Constant(b);
                     return Project(t, ad::LayerNorm(xx, gg, bb), w);
                   };
                   const Matrix in = which == 0 ? x : which == 1 ? g : b;
                   return std::make_pair(in, f);
                 }});
  }
  for (int axis = 0; axis < 2; ++axis) {
    c.push_back({"concat/axis" + std::to_string(axis), [axis](Rng& rng) {
                   const Matrix other = rng.Mat(2, 2);
                   const Matrix w = axis == 0 ? rng.Mat(4, 2) : rng.Mat(2, 4);
                   ad::ScalarFunction f = [=](Tape& t, Var v) {
                     const Var parts[] = {t.Constant(other), v};
                     return Project(t, ad::Concat(parts, axis), w);
                   };
                   return std::make_pair(rng.Mat(2, 2), f);
                 }});
  }
  c.push_back({"slice", [](Rng& rng) {
                 const Matrix w = rng.Mat(2, 2);
                 ad::ScalarFunction f = [=](Tape& t, Var v) {
                   return Project(t, ad::Slice(v, 1, 2, 1, 2), w);
                 };
                 return std::make_pair(rng.Mat(4, 4), f);
               }});
  c.push_back({"embed_lookup", [](Rng& rng) {
                 const Matrix w = rng.Mat(4, 3);
                 ad::ScalarFunction f = [=](Tape& t, Var v) {
                   const int idx[] = {2, 0, 2, 1};
                   return Project(t, ad::EmbedLookup(v, idx), w);
                 };
                 return std::make_pair(rng.Mat(3, 3), f);
               }});
  for (int side = 0; side < 2; ++side) {
    c.push_back({side ? "add_row/row" : "add_row/x", [side](Rng& rng) {
                   const Matrix x = rng.Mat(3, 4), row = rng.Mat(1, 4);
                   const Matrix w = rng.Mat(3, 4);
                   ad::ScalarFunction f = [=](Tape& t, Var v) {
                     Var xx = side == 0 ? v : t.Constant(x);
                     Var rr = side == 1 ? v : t.Constant(row);
                     return Project(t, ad::AddRow(xx, rr), w);
                   };
                   return std::make_pair(side == 0 ? x : row, f);
                 }});
  }
  return c;
}

TaskParams RandomParams(Rng& rng, int k) {
  TaskParams p;
  p.point_to = {rng.Uniform(-2, 2), rng.Uniform(-2, 2), 5.0};
  p.pattern.resize(static_cast<std::size_t>(k));
  for (auto& o : p.pattern) o = {rng.Uniform(-2, 2), rng.Uniform(-2, 2)};
  p.v_lateral = rng.Uniform(30, 70);
  p.v_descent = rng.Uniform(10, 30);
  p.accel = rng.Uniform(300, 700);
  p.f_contact = rng.Uniform(3, 8);
  return p;
}

// Packs (point_to, pattern) into one 1 x (3 + 2K) row.
Matrix Pack(const TaskParams& p) {
  const auto k = static_cast<Eigen::Index>(p.pattern.size());
  Matrix x(1, 3 + 2 * k);
  x(0, 0) = p.point_to.x;
  x(0, 1) = p.point_to.y;
  x(0, 2) = p.point_to.z;
  for (Eigen::Index i = 0; i < k; ++i) {
    x(0, 3 + 2 * i) = p.pattern[i].dx;
    x(0, 4 + 2 * i) = p.pattern[i].dy;
  }
  return x;
}

std::pair<Var, Var> Unpack(Var x, Eigen::Index k) {
  std::vector<Var> rows;
  for (Eigen::Index i = 0; i < k; ++i) rows.push_back(ad::Slice(x, 0, 1, 3 + 2 * i, 2));
  return {ad::Slice(x, 0, 1, 0, 3), ad::Concat(rows, 0)};
}

std::vector<Case> PlannerCases() {
  std::vector<Case> c;
  c.push_back({"segment_duration", [](Rng& rng) {
                 const double v = rng.Uniform(10, 70), a = rng.Uniform(300, 700);
                 // Short and long moves exercise both profile shapes.
                 const double scale = rng.Uniform(0.0, 1.0) < 0.5 ? 0.3 : 8.0;
                 Matrix x = rng.Mat(1, 6, -scale, scale);
                 ad::ScalarFunction f = [=](Tape&, Var v6) {
                   return planner::SegmentDuration(ad::Slice(v6, 0, 1, 0, 3),
                                                   ad::Slice(v6, 0, 1, 3, 3),
                                                   v, a);
                 };
                 return std::make_pair(x, f);
               }});
  c.push_back({"plan_linear_waypoints", [](Rng& rng) {
                 const double v = rng.Uniform(10, 70), a = rng.Uniform(300, 700);
                 const int n = rng.Int(2, 12);
                 Matrix x = rng.Mat(1, 6, -5.0, 5.0);
                 const Matrix w = rng.Mat(n, 4);
                 ad::ScalarFunction f = [=](Tape& t, Var v6) {
                   const planner::PlannedSegment s = planner::PlanLinear(
                       ad::Slice(v6, 0, 1, 0, 3), ad::Slice(v6, 0, 1, 3, 3), v,
                       a, n);
                   return Project(t, s.waypoints, w);
                 };
                 return std::make_pair(x, f);
               }});
  c.push_back({"search_plan_cycle_times", [](Rng& rng) {
                 const int k = rng.Int(1, 6);
                 const TaskParams p = RandomParams(rng, k);
                 const Matrix w = rng.Mat(k, 1);
                 ad::ScalarFunction f = [=](Tape& t, Var x) {
                   auto [pt, pat] = Unpack(x, k);
                   const planner::SearchPlan plan = planner::ComposeSearchPlan(
                       {0.0, 0.0, 25.0}, pt, pat, p);
                   return Project(t, plan.cumulative, w);
                 };
                 return std::make_pair(Pack(p), f);
               }});
  return c;
}

mutt::ModelWeights RandomModel(std::uint64_t seed) {
  mutt::ModelWeights w = mutt::InitWeights(mutt::ModelConfig{}, seed);
  // Non-zero output heads so every prediction depends on its inputs.
  std::mt19937_64 gen(seed + 17);
  std::normal_distribution<double> n01(0.0, 0.2);
  for (auto* set : {&w.probe, &w.search}) {
    for (auto& [name, m] : *set) {
      if (name == "out.w" || name == "out.b") {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(gen);
      }
    }
  }
  mutt::Normalization& n = w.norm;
  n.pixel_mean = 0.6;
  n.pixel_scale = 0.2;
  n.context_mean << 0.0, 0.0, 0.0, 0.0, 20.0, 500.0, 5.5;
  n.context_scale << 2.0, 2.0, 1.2, 1.2, 6.0, 115.0, 1.4;
  n.z_mean = 2.0;
  n.z_scale = 3.0;
  n.fz_mean = 0.5;
  n.fz_scale = 1.5;
  n.duration_mean = 1.0;
  n.duration_scale = 0.2;
  n.depth_mean = -1.0;
  n.depth_scale = 2.0;
  n.feature_mean << 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 2.0, 0.5;
  n.feature_scale << 2.0, 2.0, 1.2, 1.2, 0.2, 2.0, 1.0, 0.5;
  return w;
}

sim::EnvImage RandomImage(Rng& rng) {
  sim::SimConfig cfg;
  sim::EnvState env;
  env.mx = rng.Uniform(-2, 2);
  env.my = rng.Uniform(-2, 2);
  return sim::RenderImage(env, cfg, static_cast<std::uint64_t>(rng.Int(0, 1 << 30)));
}

void RunCases(const std::string& suite, const std::vector<Case>& cases,
              int instances, double tol, Rng& rng, GradCheckReport& out) {
  for (const Case& c : cases) {
    GradCheckEntry e{suite, c.name, 0, 0.0, tol};
    for (int i = 0; i < instances; ++i) {
      auto [x, f] = c.make(rng);
      const ad::GradCheckResult r = ad::FiniteDifferenceCheck(f, x, kEps);
      e.max_rel_error = std::max(e.max_rel_error, r.max_rel_error);
      ++e.instances;
    }
    out.entries.push_back(e);
  }
}

}  // namespace

int GradCheckReport::instances() const {
  int n = 0;
  for (const auto& e : entries) n += e.instances;
  return n;
}

bool GradCheckReport::pass() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const GradCheckEntry& e) { return e.pass(); });
}

double GradCheckReport::max_error(const std::string& suite) const {
  double m = 0.0;
  for (const auto& e : entries) {
    if (e.suite == suite) m = std::max(m, e.max_rel_error);
  }
  return m;
}

GradCheckReport RunGradCheckSuite(const GradCheckOptions& opts) {
  GradCheckReport out;
  Rng rng(opts.seed);
  RunCases("primitive", PrimitiveCases(), opts.per_primitive,
           opts.primitive_tolerance, rng, out);
  const auto planner_cases = PlannerCases();
  RunCases("planner", planner_cases,
           std::max(1, opts.planner_instances /
                           static_cast<int>(planner_cases.size())),
           opts.primitive_tolerance, rng, out);

  GradCheckEntry e2e{"end_to_end", "objective_wrt_point_to_and_pattern", 0,
                     0.0, opts.end_to_end_tolerance};
  const mutt::ModelWeights w = RandomModel(opts.seed);
  const mutt::MuttShadowProgram shadow(w, mutt::ShadowConfig{});
  const spi::OptimizeOptions objective_opts;
  for (int i = 0; i < opts.end_to_end_instances; ++i) {
    const int k = i == 0 ? 20 : rng.Int(2, 6);
    const TaskParams p = RandomParams(rng, k);
    const sim::EnvImage image = RandomImage(rng);
    ad::ScalarFunction f = [&, k, p](Tape&, Var x) {
      auto [pt, pat] = Unpack(x, k);
      const mutt::ShadowOutputs o = shadow.Forward(*x.tape(), pt, pat, p, image);
      return spi::Objective(o.p_probe, o.plan.cumulative, objective_opts).phi +
             o.expected_length * 1e-3;
    };
    const ad::GradCheckResult r = ad::FiniteDifferenceCheck(f, Pack(p), kEps);
    e2e.max_rel_error = std::max(e2e.max_rel_error, r.max_rel_error);
    ++e2e.instances;
  }
  out.entries.push_back(e2e);
  return out;
}

std::string FormatGradCheck(const GradCheckReport& r) {
  std::string s;
  char buf[256];
  for (const auto& e : r.entries) {
    std::snprintf(buf, sizeof(buf), "%-4s %-10s %-36s n=%-3d max_rel=%.3e tol=%.0e\n",
                  e.pass() ? "ok" : "FAIL", e.suite.c_str(), e.name.c_str(),
                  e.instances, e.max_rel_error, e.tolerance);
    s += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "instances=%d primitive=%.3e planner=%.3e end_to_end=%.3e -> %s\n",
                r.instances(), r.max_error("primitive"), r.max_error("planner"),
                r.max_error("end_to_end"), r.pass() ? "PASS" : "FAIL");
  s += buf;
  return s;
}

}  // namespace probeopt::harness
