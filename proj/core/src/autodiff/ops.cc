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

#include "probeopt/autodiff/ops.h"

#include <cmath>
#include <string>

#include "probeopt/core/errors.h"

namespace probeopt::ad {
namespace {

std::string ShapeStr(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Tape& SameTape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw InvalidArgument("operands live on different tapes");
  }
  return *a.tape();
}

bool IsScalar(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

Matrix Expand(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return Matrix::Constant(rows, cols, m(0, 0));
}

// Sums a broadcast adjoint back to the parent's shape.
Matrix Reduce(const Matrix& g, const Matrix& parent) {
  if (g.rows() == parent.rows() && g.cols() == parent.cols()) return g;
  return Matrix::Constant(1, 1, g.sum());
}

std::pair<Eigen::Index, Eigen::Index> BroadcastShape(const Matrix& a,
                                                     const Matrix& b,
                                                     const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return {a.rows(), a.cols()};
  if (IsScalar(a)) return {b.rows(), b.cols()};
  if (IsScalar(b)) return {a.rows(), a.cols()};
  throw ShapeError(std::string(op) + ": shape mismatch " + ShapeStr(a) +
                   " vs " + ShapeStr(b));
}

template <typename F, typename D>
Var Unary(Var a, Op op, F forward, D derivative) {
  Tape& t = *a.tape();
  const int ia = a.index();
  Matrix v = a.value().unaryExpr(forward);
  return t.Record(op, std::move(v), {ia}, [ia, derivative](Tape& t, int self) {
    const Matrix& x = t.value(ia);
    const Matrix& y = t.value(self);
    Matrix d(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      d(i) = derivative(x(i), y(i));
    }
    t.Accumulate(ia, t.adjoint(self).cwiseProduct(d));
  });
}

}  // namespace

Var Add(Var a, Var b) {
  Tape& t = SameTape(a, b);
  const auto [r, c] = BroadcastShape(a.value(), b.value(), "add");
  const int ia = a.index(), ib = b.index();
  Matrix v = Expand(a.value(), r, c) + Expand(b.value(), r, c);
  return t.Record(Op::kAdd, std::move(v), {ia, ib}, [ia, ib](Tape& t, int s) {
    const Matrix& g = t.adjoint(s);
    if (t.requires_grad(ia)) t.Accumulate(ia, Reduce(g, t.value(ia)));
    if (t.requires_grad(ib)) t.Accumulate(ib, Reduce(g, t.value(ib)));
  });
}

Var Sub(Var a, Var b) {
  Tape& t = SameTape(a, b);
  const auto [r, c] = BroadcastShape(a.value(), b.value(), "sub");
  const int ia = a.index(), ib = b.index();
  Matrix v = Expand(a.value(), r, c) - Expand(b.value(), r, c);
  return t.Record(Op::kSub, std::move(v), {ia, ib}, [ia, ib](Tape& t, int s) {
    const Matrix& g = t.adjoint(s);
    if (t.requires_grad(ia)) t.Accumulate(ia, Reduce(g, t.value(ia)));
    if (t.requires_grad(ib)) t.Accumulate(ib, Reduce(-g, t.value(ib)));
  });
}

Var Mul(Var a, Var b) {
  Tape& t = SameTape(a, b);
  const auto [r, c] = BroadcastShape(a.value(), b.value(), "mul");
  const int ia = a.index(), ib = b.index();
  Matrix v = Expand(a.value(), r, c).cwiseProduct(Expand(b.value(), r, c));
  return t.Record(
      Op::kMul, std::move(v), {ia, ib}, [ia, ib, r, c](Tape& t, int s) {
        const Matrix& g = t.adjoint(s);
        if (t.requires_grad(ia)) {
          t.Accumulate(
              ia, Reduce(g.cwiseProduct(Expand(t.value(ib), r, c)), t.value(ia)));
        }
        if (t.requires_grad(ib)) {
          t.Accumulate(
              ib, Reduce(g.cwiseProduct(Expand(t.value(ia), r, c)), t.value(ib)));
        }
      });
}

Var Div(Var a, Var b) {
  Tape& t = SameTape(a, b);
  const auto [r, c] = BroadcastShape(a.value(), b.value(), "div");
  const int ia = a.index(), ib = b.index();
  Matrix v = Expand(a.value(), r, c).cwiseQuotient(Expand(b.value(), r, c));
  return t.Record(
      Op::kDiv, std::move(v), {ia, ib}, [ia, ib, r, c](Tape& t, int s) {
        const Matrix& g = t.adjoint(s);
        const Matrix bb = Expand(t.value(ib), r, c);
        if (t.requires_grad(ia)) {
          t.Accumulate(ia, Reduce(g.cwiseQuotient(bb), t.value(ia)));
        }
        if (t.requires_grad(ib)) {
          const Matrix& y = t.value(s);
          t.Accumulate(ib, Reduce(-g.cwiseProduct(y).cwiseQuotient(bb),
                                  t.value(ib)));
        }
      });
}

Var Add(Var a, double c) {
  Tape& t = *a.tape();
  const int ia = a.index();
  Matrix v = a.value().array() + c;
  return t.Record(Op::kAdd, std::move(v), {ia}, [ia](Tape& t, int s) {
    t.Accumulate(ia, t.adjoint(s));
  });
}

Var Mul(Var a, double c) {
  Tape& t = *a.tape();
  const int ia = a.index();
  Matrix v = a.value() * c;
  return t.Record(Op::kMul, std::move(v), {ia}, [ia, c](Tape& t, int s) {
    t.Accumulate(ia, t.adjoint(s) * c);
  });
}

Var MatMul(Var a, Var b) {
  Tape& t = SameTape(a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + ShapeStr(a.value()) + " * " +
                     ShapeStr(b.value()));
  }
  const int ia = a.index(), ib = b.index();
  Matrix v = a.value() * b.value();
  return t.Record(Op::kMatMul, std::move(v), {ia, ib},
                  [ia, ib](Tape& t, int s) {
                    const Matrix& g = t.adjoint(s);
                    if (t.requires_grad(ia)) {
                      t.Accumulate(ia, g * t.value(ib).transpose());
                    }
                    if (t.requires_grad(ib)) {
                      t.Accumulate(ib, t.value(ia).transpose() * g);
                    }
                  });
}

Var Transpose(Var a) {
  Tape& t = *a.tape();
  const int ia = a.index();
  Matrix v = a.value().transpose();
  return t.Record(Op::kTranspose, std::move(v), {ia}, [ia](Tape& t, int s) {
    t.Accumulate(ia, t.adjoint(s).transpose());
  });
}

Var Sum(Var a) {
  Tape& t = *a.tape();
  const int ia = a.index();
  Matrix v = Matrix::Constant(1, 1, a.value().sum());
  return t.Record(Op::kSum, std::move(v), {ia}, [ia](Tape& t, int s) {
    const Matrix& x = t.value(ia);
    t.Accumulate(ia, Matrix::Constant(x.rows(), x.cols(), t.adjoint(s)(0, 0)));
  });
}

Var Sum(Var a, int axis) {
  Tape& t = *a.tape();
  const int ia = a.index();
  if (axis != 0 && axis != 1) throw InvalidArgument("sum: axis must be 0 or 1");
  Matrix v = axis == 0 ? Matrix(a.value().colwise().sum())
                       : Matrix(a.value().rowwise().sum());
  return t.Record(Op::kSumAxis, std::move(v), {ia}, [ia, axis](Tape& t, int s) {
    const Matrix& g = t.adjoint(s);
    const Eigen::Index r = t.value(ia).rows(), c = t.value(ia).cols();
    if (axis == 0) {
      t.Accumulate(ia, g.replicate(r, 1));
    } else {
      t.Accumulate(ia, g.replicate(1, c));
    }
  });
}

Var Mean(Var a) {
  Tape& t = *a.tape();
  const int ia = a.index();
  const double n = static_cast<double>(a.value().size());
  Matrix v = Matrix::Constant(1, 1, a.value().sum() / n);
  return t.Record(Op::kMean, std::move(v), {ia}, [ia, n](Tape& t, int s) {
    const Matrix& x = t.value(ia);
    t.Accumulate(ia,
                 Matrix::Constant(x.rows(), x.cols(), t.adjoint(s)(0, 0) / n));
  });
}

Var Max(Var a) {
  Tape& t = *a.tape();
  const int ia = a.index();
  Eigen::Index r = 0, c = 0;
  const double m = a.value().maxCoeff(&r, &c);
  return t.Record(Op::kMax, Matrix::Constant(1, 1, m), {ia},
                  [ia, r, c](Tape& t, int s) {
                    const Matrix& x = t.value(ia);
                    Matrix d = Matrix::Zero(x.rows(), x.cols());
                    d(r, c) = t.adjoint(s)(0, 0);
                    t.Accumulate(ia, d);
                  });
}

Var Exp(Var a) {
  return Unary(
      a, Op::kExp, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var Log(Var a) {
  return Unary(
      a, Op::kLog, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var Tanh(Var a) {
  return Unary(
      a, Op::kTanh, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var Sigmoid(Var a) {
  return Unary(
      a, Op::kSigmoid,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var Relu(Var a) {
  return Unary(
      a, Op::kRelu, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var Gelu(Var a) {
  constexpr double k = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double c = 0.044715;
  return Unary(
      a, Op::kGelu,
      [](double x) {
        return 0.5 * x * (1.0 + std::tanh(k * (x + c * x * x * x)));
      },
      [](double x, double) {
        const double u = k * (x + c * x * x * x);
        const double th = std::tanh(u);
        const double du = k * (1.0 + 3.0 * c * x * x);
        return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
      });
}

Var Softplus(Var a) {
  return Unary(
      a, Op::kSoftplus,
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var Sqrt(Var a) {
  return Unary(
      a, Op::kSqrt, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Var Square(Var a) {
  return Unary(
      a, Op::kSquare, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Var Softmax(Var a, int axis) {
  Tape& t = *a.tape();
  const int ia = a.index();
  if (axis != 0 && axis != 1) {
    throw InvalidArgument("softmax: axis must be 0 or 1");
  }
  // Work row-wise; transpose in and out for axis 0.
  Matrix x = axis == 1 ? a.value() : Matrix(a.value().transpose());
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  if (axis == 0) y.transposeInPlace();
  return t.Record(Op::kSoftmax, std::move(y), {ia}, [ia, axis](Tape& t, int s) {
    const Matrix& y = t.value(s);
    const Matrix& g = t.adjoint(s);
    const Matrix gy = g.cwiseProduct(y);
    if (axis == 1) {
      const Eigen::VectorXd dot = gy.rowwise().sum();
      t.Accumulate(ia, gy - (y.array().colwise() * dot.array()).matrix());
    } else {
      const Eigen::RowVectorXd dot = gy.colwise().sum();
      t.Accumulate(ia, gy - (y.array().rowwise() * dot.array()).matrix());
    }
  });
}

Var LayerNorm(Var x, Var gain, Var bias, double eps) {
  Tape& t = SameTape(x, gain);
  SameTape(x, bias);
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.rows(), d = xv.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 ||
      bias.cols() != d) {
    throw ShapeError("layernorm: gain/bias must be 1x" + std::to_string(d));
  }
  Matrix xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
  }
  Matrix y = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  y.rowwise() += bias.value().row(0);
  const int ix = x.index(), ig = gain.index(), ib = bias.index();
  return t.Record(
      Op::kLayerNorm, std::move(y), {ix, ig, ib},
      [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, int s) {
        const Matrix& g = t.adjoint(s);
        if (t.requires_grad(ig)) {
          t.Accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
        }
        if (t.requires_grad(ib)) t.Accumulate(ib, g.colwise().sum());
        if (t.requires_grad(ix)) {
          const Matrix dxhat =
              (g.array().rowwise() * t.value(ig).row(0).array()).matrix();
          const double d = static_cast<double>(dxhat.cols());
          Matrix dx(dxhat.rows(), dxhat.cols());
          for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
            const double m1 = dxhat.row(r).sum() / d;
            const double m2 = dxhat.row(r).dot(xhat.row(r)) / d;
            dx.row(r) = inv_std(r) * (dxhat.row(r).array() - m1 -
                                      xhat.row(r).array() * m2)
                                         .matrix();
          }
          t.Accumulate(ix, dx);
        }
      });
}

Var Concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw InvalidArgument("concat of nothing");
  if (axis != 0 && axis != 1) {
    throw InvalidArgument("concat: axis must be 0 or 1");
  }
  Tape& t = *parts[0].tape();
  Eigen::Index rows = 0, cols = 0;
  std::vector<int> idx;
  idx.reserve(parts.size());
  for (const Var& p : parts) {
    SameTape(parts[0], p);
    idx.push_back(p.index());
    if (axis == 0) {
      if (rows > 0 && p.cols() != cols) {
        throw ShapeError("concat rows: column mismatch " + ShapeStr(p.value()));
      }
      cols = p.cols();
      rows += p.rows();
    } else {
      if (cols > 0 && p.rows() != rows) {
        throw ShapeError("concat cols: row mismatch " + ShapeStr(p.value()));
      }
      rows = p.rows();
      cols += p.cols();
    }
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    if (axis == 0) {
      v.middleRows(off, p.rows()) = p.value();
      off += p.rows();
    } else {
      v.middleCols(off, p.cols()) = p.value();
      off += p.cols();
    }
  }
  return t.Record(Op::kConcat, std::move(v), idx, [idx, axis](Tape& t, int s) {
    const Matrix& g = t.adjoint(s);
    Eigen::Index off = 0;
    for (int i : idx) {
      const Matrix& pv = t.value(i);
      if (axis == 0) {
        if (t.requires_grad(i)) t.Accumulate(i, g.middleRows(off, pv.rows()));
        off += pv.rows();
      } else {
        if (t.requires_grad(i)) t.Accumulate(i, g.middleCols(off, pv.cols()));
        off += pv.cols();
      }
    }
  });
}

Var Slice(Var a, Eigen::Index row, Eigen::Index nrows, Eigen::Index col,
          Eigen::Index ncols) {
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  if (row < 0 || col < 0 || nrows < 0 || ncols < 0 ||
      row + nrows > av.rows() || col + ncols > av.cols()) {
    throw ShapeError("slice out of range for " + ShapeStr(av));
  }
  const int ia = a.index();
  Matrix v = av.block(row, col, nrows, ncols);
  return t.Record(Op::kSlice, std::move(v), {ia},
                  [ia, row, col, nrows, ncols](Tape& t, int s) {
                    const Matrix& x = t.value(ia);
                    Matrix d = Matrix::Zero(x.rows(), x.cols());
                    d.block(row, col, nrows, ncols) = t.adjoint(s);
                    t.Accumulate(ia, d);
                  });
}

Var EmbedLookup(Var table, std::span<const int> indices) {
  Tape& t = *table.tape();
  const Matrix& tv = table.value();
  Matrix v(static_cast<Eigen::Index>(indices.size()), tv.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= tv.rows()) {
      throw ShapeError("embed_lookup: index " + std::to_string(indices[i]) +
                       " outside table of " + std::to_string(tv.rows()) +
                       " rows");
    }
    v.row(static_cast<Eigen::Index>(i)) = tv.row(indices[i]);
  }
  const int it = table.index();
  std::vector<int> ids(indices.begin(), indices.end());
  return t.Record(Op::kEmbedLookup, std::move(v), {it},
                  [it, ids = std::move(ids)](Tape& t, int s) {
                    const Matrix& g = t.adjoint(s);
                    const Matrix& x = t.value(it);
                    Matrix d = Matrix::Zero(x.rows(), x.cols());
                    for (std::size_t i = 0; i < ids.size(); ++i) {
                      d.row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
                    }
                    t.Accumulate(it, d);
                  });
}

Var AddRow(Var x, Var row) {
  Tape& t = SameTape(x, row);
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw ShapeError("add_row: " + ShapeStr(row.value()) + " onto " +
                     ShapeStr(x.value()));
  }
  const int ix = x.index(), ir = row.index();
  Matrix v = x.value();
  v.rowwise() += row.value().row(0);
  return t.Record(Op::kAddRow, std::move(v), {ix, ir},
                  [ix, ir](Tape& t, int s) {
                    const Matrix& g = t.adjoint(s);
                    if (t.requires_grad(ix)) t.Accumulate(ix, g);
                    if (t.requires_grad(ir)) {
                      t.Accumulate(ir, g.colwise().sum());
                    }
                  });
}

}  // namespace probeopt::ad
