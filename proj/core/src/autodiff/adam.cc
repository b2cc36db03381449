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
#include "probeopt/autodiff/adam.h"

#include <cmath>

#include "probeopt/core/errors.h"

namespace probeopt::ad {

void Adam::Step(const std::vector<Matrix*>& params,
                const std::vector<const Matrix*>& grads, double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam: params/grads count mismatch");
  }
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (m_.size() != params.size()) {
    throw ShapeError("adam: parameter count changed between steps");
  }
  ++t_;
  const double b1 = opts_.beta1, b2 = opts_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = *grads[i];
    if (g.rows() != m_[i].rows() || g.cols() != m_[i].cols() ||
        params[i]->rows() != g.rows() || params[i]->cols() != g.cols()) {
      throw ShapeError("adam: block shape mismatch");
    }
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g.cwiseProduct(g);
    *params[i] -= (lr * (m_[i] / c1).array() /
                   ((v_[i] / c2).array().sqrt() + opts_.eps))
                      .matrix();
  }
}

}  // namespace probeopt::ad
