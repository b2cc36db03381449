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

#include "probeopt/autodiff/tape.h"

#include <array>
#include <string>
#include <utility>

#include "probeopt/core/errors.h"

namespace probeopt::ad {
namespace {

constexpr std::array<std::pair<Op, std::string_view>, 26> kOpNames{{
    {Op::kLeaf, "leaf"},         {Op::kAdd, "add"},
    {Op::kSub, "sub"},           {Op::kMul, "mul"},
    {Op::kDiv, "div"},           {Op::kMatMul, "matmul"},
    {Op::kTranspose, "transpose"}, {Op::kSum, "sum"},
    {Op::kSumAxis, "sum_axis"},  {Op::kMean, "mean"},
    {Op::kMax, "max"},           {Op::kExp, "exp"},
    {Op::kLog, "log"},           {Op::kTanh, "tanh"},
    {Op::kSigmoid, "sigmoid"},   {Op::kRelu, "relu"},
    {Op::kGelu, "gelu"},         {Op::kSoftplus, "softplus"},
    {Op::kSqrt, "sqrt"},         {Op::kSquare, "square"},
    {Op::kSoftmax, "softmax"},   {Op::kLayerNorm, "layernorm"},
    {Op::kConcat, "concat"},     {Op::kSlice, "slice"},
    {Op::kEmbedLookup, "embed_lookup"}, {Op::kAddRow, "add_row"},
}};

thread_local std::optional<Op> corrupted_op;

}  // namespace

std::string_view OpName(Op op) {
  for (const auto& [o, name] : kOpNames) {
    if (o == op) return name;
  }
  return "unknown";
}

std::optional<Op> OpFromName(std::string_view name) {
  for (const auto& [o, n] : kOpNames) {
    if (n == name) return o;
  }
  return std::nullopt;
}

const Matrix& Var::value() const { return tape_->value(index_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("scalar() on a " + std::to_string(v.rows()) + "x" +
                     std::to_string(v.cols()) + " node");
  }
  return v(0, 0);
}

Var Tape::Leaf(Matrix value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Variable(Matrix value) { return Leaf(std::move(value), true); }

Var Tape::Constant(Matrix value) { return Leaf(std::move(value), false); }

Var Tape::Record(Op op, Matrix value, std::vector<int> parents,
                 BackwardFn fn) {
  bool needs = false;
  for (int p : parents) needs = needs || nodes_[p].requires_grad;
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.requires_grad = needs;
  if (needs) {
    n.parents = std::move(parents);
    n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::Accumulate(int i, const Matrix& delta) {
  Accumulate<Matrix>(i, delta);
}

void Tape::Backward(Var output) {
  if (output.tape() != this) {
    throw InvalidArgument("Backward() on a node from another tape");
  }
  const Matrix& out = nodes_[output.index()].value;
  if (out.rows() != 1 || out.cols() != 1) {
    throw InvalidArgument("Backward() needs a scalar output, got " +
                          std::to_string(out.rows()) + "x" +
                          std::to_string(out.cols()));
  }
  for (Node& n : nodes_) {
    if (n.op != Op::kLeaf) n.grad.resize(0, 0);
  }
  const int root = output.index();
  Accumulate(root, Matrix::Ones(1, 1));
  for (int i = root; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.op == Op::kLeaf || !n.requires_grad || n.grad.size() == 0) continue;
    if (corrupted_op && *corrupted_op == n.op) n.grad *= 1.5;
    n.backward(*this, i);
  }
}

Matrix Tape::Grad(Var v) const {
  const Node& n = nodes_[v.index()];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::ZeroGrad() {
  for (Node& n : nodes_) n.grad.resize(0, 0);
}

void Tape::CheckFinite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].value.allFinite()) {
      throw NumericError("non-finite value at node " + std::to_string(i) +
                         " (" + std::string(OpName(nodes_[i].op)) + ")");
    }
  }
}

namespace testing {

void CorruptBackwardRule(std::optional<Op> op) { corrupted_op = op; }
std::optional<Op> CorruptedBackwardRule() { return corrupted_op; }

}  // namespace testing

}  // namespace probeopt::ad
