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
// First/second-moment adaptive gradient steps over dense parameter blocks.

#ifndef PROBEOPT_AUTODIFF_ADAM_H_
#define PROBEOPT_AUTODIFF_ADAM_H_

#include <cstdint>
#include <vector>

#include "probeopt/autodiff/tape.h"

namespace probeopt::ad {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

  // Updates params[i] -= lr * m_hat / (sqrt(v_hat) + eps). The number and
  // shapes of blocks are fixed by the first call.
  void Step(const std::vector<Matrix*>& params,
            const std::vector<const Matrix*>& grads, double lr);

  std::int64_t steps() const { return t_; }

 private:
  AdamOptions opts_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::int64_t t_ = 0;
};

}  // namespace probeopt::ad

#endif  // PROBEOPT_AUTODIFF_ADAM_H_
