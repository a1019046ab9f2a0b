// Copyright 2026 The eqdf Authors
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

#include "eqdf/optim.hpp"

#include <cmath>
#include <string>

#include "eqdf/error.hpp"

namespace eqdf {

void Adam::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double lr) {
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  if (grads.size() != params.size())
    throw UsageError("adam: " + std::to_string(grads.size()) + " gradients for " + std::to_string(params.size()) +
                     " parameter tensors");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.shape);
      v_.emplace_back(p.shape);
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape != grads[i].shape || params[i].shape != m_[i].shape)
      throw UsageError("adam: shape mismatch for parameter " + std::to_string(i) + " " +
                       shape_string(params[i].shape) + " vs " + shape_string(grads[i].shape));
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].data;
    const auto& g = grads[i].data;
    auto& m = m_[i].data;
    auto& v = v_[i].data;
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

double lr_schedule(int epoch, double initial, double decay, int period) {
  if (period < 1) throw UsageError("lr decay period must be at least 1");
  if (!(decay > 0.0 && decay <= 1.0)) throw UsageError("lr decay must lie in (0, 1]");
  if (epoch < 0) throw UsageError("epoch must be non-negative");
  return initial * std::pow(decay, epoch / period);
}

}  // namespace eqdf
