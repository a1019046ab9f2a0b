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

#ifndef EQDF_SVM_HPP
#define EQDF_SVM_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace eqdf {

/// Dense row-major kernel matrix over one point set.
struct KernelMatrix {
  std::size_t n = 0;
  std::vector<double> k;

  double operator()(std::size_t i, std::size_t j) const noexcept { return k[i * n + j]; }
};

double rbf(std::span<const double> a, std::span<const double> b, double gamma) noexcept;
/// Points are rows of a (n, dim) row-major array.
KernelMatrix rbf_matrix(std::span<const double> points, std::size_t dim, double gamma);

struct SmoOptions {
  double C = 1.0;
  double tol = 1e-3;
  long max_iter = 100000;
};

/// Solution of min 1/2 a'Qa - sum(a), 0 <= a <= C, y'a = 0 with
/// Q_ij = y_i y_j K_ij. The decision value is sum_i a_i y_i K(x_i, x) + b.
struct BinarySvm {
  std::vector<double> alpha;
  double b = 0.0;
  long iterations = 0;
  double max_violation = 0.0;
  bool converged = false;
};

/// Sequential minimal optimization with second-order working-set selection.
/// Labels must be +1 or -1 and include both signs.
BinarySvm smo_train(const KernelMatrix& K, std::span<const int> y, const SmoOptions& opt = {});

double dual_objective(const KernelMatrix& K, std::span<const int> y, std::span<const double> alpha);
/// max over I_up of -y_i grad_i minus min over I_low of the same; < tol at an optimum.
double kkt_violation(const KernelMatrix& K, std::span<const int> y, std::span<const double> alpha, double C);

/// P(positive | f) = 1 / (1 + exp(a f + b)).
struct PlattSigmoid {
  double a = -1.0;
  double b = 0.0;

  double operator()(double f) const noexcept;
};

/// Maximum-likelihood sigmoid fit with smoothed targets (Newton with
/// backtracking). `positive` marks the class-of-interest rows.
PlattSigmoid fit_platt(std::span<const double> decision, std::span<const std::uint8_t> positive);

}  // namespace eqdf

#endif  // EQDF_SVM_HPP
