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

// Define-by-run reverse-mode differentiation over dense double matrices.
//
// Every operation appends a node to the Tape; nodes are stored in creation
// order, which is a topological order, so Backward() walks the vector from
// the output towards index 0. A Tape is single-threaded. Independent tapes
// may run concurrently.
//
//   ad::Tape tape;
//   ad::Var x = tape.Variable(Matrix::Constant(1, 1, 3.0));
//   ad::Var y = ad::Mul(x, x);
//   tape.Backward(y);
//   tape.Grad(x)(0, 0);  // 6

#ifndef PROBEOPT_AUTODIFF_TAPE_H_
#define PROBEOPT_AUTODIFF_TAPE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace probeopt::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double scalar() const;

  Tape* tape() const { return tape_; }
  int index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  int index_ = -1;
};

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMatMul,
  kTranspose,
  kSum,
  kSumAxis,
  kMean,
  kMax,
  kExp,
  kLog,
  kTanh,
  kSigmoid,
  kRelu,
  kGelu,
  kSoftplus,
  kSqrt,
  kSquare,
  kSoftmax,
  kLayerNorm,
  kConcat,
  kSlice,
  kEmbedLookup,
  kAddRow,
};

std::string_view OpName(Op op);
std::optional<Op> OpFromName(std::string_view name);

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that receives a gradient.
  Var Variable(Matrix value);
  // Leaf treated as a constant by Backward().
  Var Constant(Matrix value);
  Var Scalar(double value) { return Constant(Matrix::Constant(1, 1, value)); }

  // Accumulates d(output)/d(leaf) into every Variable leaf. Intermediate
  // adjoints are recomputed from scratch on each call, so calling twice
  // doubles the leaf gradients. Throws InvalidArgument for non-1x1 output.
  void Backward(Var output);

  // Gradient of a leaf (zeros if Backward never reached it).
  Matrix Grad(Var v) const;
  void ZeroGrad();

  // Throws NumericError naming the first node with a non-finite value.
  void CheckFinite() const;

  std::size_t size() const { return nodes_.size(); }

  // Operation plumbing. Ops build the value, then record it together with
  // a closure that pushes the node's adjoint to its parents.
  Var Record(Op op, Matrix value, std::vector<int> parents, BackwardFn fn);
  const Matrix& value(int i) const { return nodes_[i].value; }
  const Matrix& adjoint(int i) const { return nodes_[i].grad; }
  bool requires_grad(int i) const { return nodes_[i].requires_grad; }
  // Adds `delta` to node i's adjoint; no-op for constants.
  void Accumulate(int i, const Matrix& delta);
  template <typename Expr>
  void Accumulate(int i, const Eigen::MatrixBase<Expr>& delta) {
    if (!nodes_[i].requires_grad) return;
    Matrix& g = nodes_[i].grad;
    if (g.size() == 0) {
      g = delta;
    } else {
      g += delta;
    }
  }
  Op op(int i) const { return nodes_[i].op; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<int> parents;
    BackwardFn backward;
    Op op = Op::kLeaf;
    bool requires_grad = false;
  };

  Var Leaf(Matrix value, bool requires_grad);

  std::vector<Node> nodes_;
};

namespace testing {

// Scales the backward rule of `op` by 1.5 on the calling thread, or restores
// the correct rules when passed std::nullopt. Negative-control hook for the
// gradient-check harness.
void CorruptBackwardRule(std::optional<Op> op);
std::optional<Op> CorruptedBackwardRule();

}  // namespace testing

}  // namespace probeopt::ad

#endif  // PROBEOPT_AUTODIFF_TAPE_H_
