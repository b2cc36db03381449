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

// Central finite-difference verification of tape gradients.

#ifndef PROBEOPT_AUTODIFF_GRADCHECK_H_
#define PROBEOPT_AUTODIFF_GRADCHECK_H_

#include <functional>
#include <span>

#include "probeopt/autodiff/tape.h"

namespace probeopt::ad {

// Builds a scalar on `tape` from the input leaf.
using ScalarFunction = std::function<Var(Tape& tape, Var x)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  Matrix analytic;
  Matrix numeric;  // only checked coordinates are filled
};

// max over coordinates of |analytic - central difference| / max(1, |analytic|).
// When `coords` is empty every coordinate of x is checked. Throws
// NumericError if f or its gradient is non-finite near x.
GradCheckResult FiniteDifferenceCheck(const ScalarFunction& f, const Matrix& x,
                                      double eps,
                                      std::span<const Eigen::Index> coords = {});

}  // namespace probeopt::ad

#endif  // PROBEOPT_AUTODIFF_GRADCHECK_H_
