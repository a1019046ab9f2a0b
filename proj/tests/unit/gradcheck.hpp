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

#ifndef EQDF_TESTS_GRADCHECK_HPP
#define EQDF_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "eqdf/layers.hpp"
#include "support.hpp"

namespace eqdf::testing {

inline constexpr double kStep = 1e-6;
inline constexpr double kTol = 1e-5;

inline double weighted_sum(const Tensor& out, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out.data[i] * w.data[i];
  return s;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nb), 1e-12);
}

/// Central differences of f(net, x) = <w, forward(x)> against backward().
/// Checks the input gradient and, when requested, every parameter.
inline double check_network(Network& net, const Tensor& x, Mode mode, Rng& rng, bool params) {
  ForwardCache cache;
  const Tensor out = net.forward(x, mode, &cache);
  const Tensor w = random_tensor(out.shape, rng);
  const GradientPair g = net.backward(cache, w, params);
  auto f = [&](const Tensor& in) { return weighted_sum(net.forward(in, mode), w); };

  std::vector<double> analytic = g.input_grad.data, numeric;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = probe.data[i];
    probe.data[i] = v + kStep;
    const double up = f(probe);
    probe.data[i] = v - kStep;
    const double down = f(probe);
    probe.data[i] = v;
    numeric.push_back((up - down) / (2 * kStep));
  }
  if (params) {
    for (std::size_t p = 0; p < net.params().size(); ++p) {
      analytic.insert(analytic.end(), g.param_grads[p].data.begin(), g.param_grads[p].data.end());
      for (double& v : net.params()[p].data) {
        const double keep = v;
        v = keep + kStep;
        const double up = f(x);
        v = keep - kStep;
        const double down = f(x);
        v = keep;
        numeric.push_back((up - down) / (2 * kStep));
      }
    }
  }
  return relative_error(analytic, numeric);
}

inline void randomize_params(Network& net, Rng& rng) {
  for (auto& p : net.params())
    for (double& v : p.data) v = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}


struct LayerCase {
  const char* name;
  std::vector<LayerSpec> layers;
  ActShape in;
  Mode mode;
};

/// One or more configurations per layer kind with parameters.
inline std::vector<LayerCase> layer_cases() {
  return {
      {"conv1d", {LayerSpec::conv1d(2, 3, 4, 2, 1)}, {2, 11}, Mode::eval},
      {"conv1d stride 1", {LayerSpec::conv1d(1, 2, 3)}, {1, 9}, Mode::eval},
      {"linear", {LayerSpec::linear(5, 4)}, {5, 0}, Mode::eval},
      {"relu", {LayerSpec::relu()}, {3, 6}, Mode::eval},
      {"silu", {LayerSpec::silu()}, {3, 6}, Mode::eval},
      {"batchnorm1d train", {LayerSpec::batchnorm1d(3)}, {3, 5}, Mode::train},
      {"batchnorm1d eval", {LayerSpec::batchnorm1d(3)}, {3, 5}, Mode::eval},
      {"batchnorm1d flat train", {LayerSpec::batchnorm1d(4)}, {4, 0}, Mode::train},
      {"maxpool1d", {LayerSpec::maxpool1d(3)}, {2, 10}, Mode::eval},
      {"globalavgpool", {LayerSpec::globalavgpool()}, {3, 7}, Mode::eval},
  };
}

}  // namespace eqdf::testing

#endif  // EQDF_TESTS_GRADCHECK_HPP
