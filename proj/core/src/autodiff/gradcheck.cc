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

#include "probeopt/autodiff/gradcheck.h"

#include <cmath>
#include <vector>

#include "probeopt/core/errors.h"

namespace probeopt::ad {
namespace {

double Evaluate(const ScalarFunction& f, const Matrix& x) {
  Tape tape;
  const double v = f(tape, tape.Constant(x)).scalar();
  if (!std::isfinite(v)) throw NumericError("gradcheck: f is non-finite");
  return v;
}

}  // namespace

GradCheckResult FiniteDifferenceCheck(const ScalarFunction& f, const Matrix& x,
                                      double eps,
                                      std::span<const Eigen::Index> coords) {
  if (!(eps > 0.0)) throw InvalidArgument("gradcheck: eps must be > 0");
  GradCheckResult out;
  {
    Tape tape;
    Var leaf = tape.Variable(x);
    Var y = f(tape, leaf);
    tape.Backward(y);
    out.analytic = tape.Grad(leaf);
  }
  if (!out.analytic.allFinite()) {
    throw NumericError("gradcheck: analytic gradient is non-finite");
  }
  out.numeric = Matrix::Zero(x.rows(), x.cols());
  std::vector<Eigen::Index> all;
  if (coords.empty()) {
    all.resize(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) all[i] = i;
    coords = all;
  }
  Matrix probe = x;
  for (Eigen::Index i : coords) {
    const double x0 = probe(i);
    probe(i) = x0 + eps;
    const double fp = Evaluate(f, probe);
    probe(i) = x0 - eps;
    const double fm = Evaluate(f, probe);
    probe(i) = x0;
    const double num = (fp - fm) / (2.0 * eps);
    out.numeric(i) = num;
    const double a = out.analytic(i);
    const double err = std::abs(a - num) / std::max(1.0, std::abs(a));
    if (err > out.max_rel_error || out.worst_index < 0) {
      out.max_rel_error = std::max(out.max_rel_error, err);
      if (err >= out.max_rel_error) out.worst_index = i;
    }
  }
  return out;
}

}  // namespace probeopt::ad
