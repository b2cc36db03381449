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

// Differentiable primitives. All inputs must live on the same tape.
//
// Element-wise binary ops require equal shapes, except that either side may
// be 1x1 (scalar broadcast). No other implicit broadcasting exists; row-wise
// bias addition is the explicit AddRow().

#ifndef PROBEOPT_AUTODIFF_OPS_H_
#define PROBEOPT_AUTODIFF_OPS_H_

#include <span>
#include <vector>

#include "probeopt/autodiff/tape.h"

namespace probeopt::ad {

Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Div(Var a, Var b);
Var Add(Var a, double c);
Var Mul(Var a, double c);

inline Var operator+(Var a, Var b) { return Add(a, b); }
inline Var operator-(Var a, Var b) { return Sub(a, b); }
inline Var operator*(Var a, Var b) { return Mul(a, b); }
inline Var operator/(Var a, Var b) { return Div(a, b); }
inline Var operator+(Var a, double c) { return Add(a, c); }
inline Var operator+(double c, Var a) { return Add(a, c); }
inline Var operator-(Var a, double c) { return Add(a, -c); }
inline Var operator-(double c, Var a) { return Add(Mul(a, -1.0), c); }
inline Var operator*(Var a, double c) { return Mul(a, c); }
inline Var operator*(double c, Var a) { return Mul(a, c); }
inline Var operator-(Var a) { return Mul(a, -1.0); }

Var MatMul(Var a, Var b);
Var Transpose(Var a);

Var Sum(Var a);             // -> 1x1
Var Sum(Var a, int axis);   // axis 0 -> 1xC, axis 1 -> Rx1
Var Mean(Var a);            // -> 1x1
Var Max(Var a);             // -> 1x1, gradient to the first maximum

Var Exp(Var a);
Var Log(Var a);
Var Tanh(Var a);
Var Sigmoid(Var a);
Var Relu(Var a);
Var Gelu(Var a);       // tanh approximation
Var Softplus(Var a);   // log(1 + exp(a)), overflow safe
Var Sqrt(Var a);
Var Square(Var a);

// Normalizes along `axis` (1: each row sums to one).
Var Softmax(Var a, int axis);
// Row-wise normalization followed by per-column gain and bias (1xC each).
Var LayerNorm(Var x, Var gain, Var bias, double eps = 1e-5);

// axis 0 stacks rows, axis 1 stacks columns.
Var Concat(std::span<const Var> parts, int axis);
Var Slice(Var a, Eigen::Index row, Eigen::Index nrows, Eigen::Index col,
          Eigen::Index ncols);
// Gathers rows of `table` in the order given by `indices`.
Var EmbedLookup(Var table, std::span<const int> indices);
// Adds a 1xC row to every row of x.
Var AddRow(Var x, Var row);

}  // namespace probeopt::ad

#endif  // PROBEOPT_AUTODIFF_OPS_H_
