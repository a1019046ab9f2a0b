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

#include "eqdf/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eqdf/error.hpp"

namespace eqdf {

double rbf(std::span<const double> a, std::span<const double> b, double gamma) noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return std::exp(-gamma * d);
}

KernelMatrix rbf_matrix(std::span<const double> points, std::size_t dim, double gamma) {
  if (!(gamma > 0)) throw UsageError("RBF gamma must be positive");
  if (dim == 0 || points.size() % dim != 0) throw UsageError("RBF points do not match the feature dimension");
  KernelMatrix K;
  K.n = points.size() / dim;
  K.k.assign(K.n * K.n, 0.0);
  for (std::size_t i = 0; i < K.n; ++i) {
    K.k[i * K.n + i] = 1.0;
    for (std::size_t j = i + 1; j < K.n; ++j) {
      const double v = rbf(points.subspan(i * dim, dim), points.subspan(j * dim, dim), gamma);
      K.k[i * K.n + j] = v;
      K.k[j * K.n + i] = v;
    }
  }
  return K;
}

namespace {

constexpr double kTau = 1e-12;

bool in_up(int y, double a, double C) noexcept { return (y > 0 && a < C) || (y < 0 && a > 0); }
bool in_low(int y, double a, double C) noexcept { return (y > 0 && a > 0) || (y < 0 && a < C); }

std::vector<double> gradient(const KernelMatrix& K, std::span<const int> y, std::span<const double> alpha) {
  const std::size_t n = K.n;
  std::vector<double> G(n, -1.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (alpha[j] == 0) continue;
    for (std::size_t i = 0; i < n; ++i) G[i] += y[i] * y[j] * K(i, j) * alpha[j];
  }
  return G;
}

}  // namespace

BinarySvm smo_train(const KernelMatrix& K, std::span<const int> y, const SmoOptions& opt) {
  const std::size_t n = K.n;
  if (y.size() != n) throw UsageError("SMO: label count does not match the kernel matrix");
  if (!(opt.C > 0)) throw UsageError("SMO: C must be positive");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v != 1 && v != -1) throw UsageError("SMO: labels must be +1 or -1");
    (v > 0 ? pos : neg) = true;
  }
  if (!pos || !neg) throw DataError("SMO: training data contains a single class");

  const double C = opt.C;
  BinarySvm out;
  out.alpha.assign(n, 0.0);
  auto& a = out.alpha;
  std::vector<double> G(n, -1.0);

  while (true) {
    // Working set: i maximizes -y G over I_up; j minimizes the second-order
    // objective decrease over I_low with -y_j G_j < -y_i G_i.
    double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t)
      if (in_up(y[t], a[t], C) && -y[t] * G[t] >= gmax) {
        if (-y[t] * G[t] > gmax || i == n) i = t;
        gmax = -y[t] * G[t];
      }
    std::size_t j = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(y[t], a[t], C)) continue;
      const double v = -y[t] * G[t];
      gmin = std::min(gmin, v);
      if (i == n) continue;
      const double diff = gmax - v;
      if (diff > 0) {
        double quad = K(i, i) + K(t, t) - 2.0 * K(i, t);
        if (quad <= 0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj < best) {
          best = obj;
          j = t;
        }
      }
    }
    out.max_violation = gmax - gmin;
    if (i == n || j == n || out.max_violation < opt.tol) {
      out.converged = true;
      break;
    }
    if (out.iterations >= opt.max_iter) break;
    ++out.iterations;

    const double ai = a[i], aj = a[j];
    const int yi = y[i], yj = y[j];
    double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
    if (quad <= 0) quad = kTau;
    // Step along the feasible direction y_i d_i = -y_j d_j.
    double step = (-yi * G[i] + yj * G[j]) / quad;
    // Bounds for a_i' = a_i + y_i * step and a_j' = a_j - y_j * step.
    auto range = [&](double av, int yv, double sign) {
      // returns [lo, hi] of admissible step for variable with a' = av + sign*yv*step
      const double dir = sign * yv;
      return dir > 0 ? std::pair{-av, C - av} : std::pair{av - C, av};
    };
    const auto [li, hi_i] = range(ai, yi, 1.0);
    const auto [lj, hj] = range(aj, yj, -1.0);
    step = std::clamp(step, std::max(li, lj), std::min(hi_i, hj));
    a[i] = std::clamp(ai + yi * step, 0.0, C);
    a[j] = std::clamp(aj - yj * step, 0.0, C);
    const double di = a[i] - ai, dj = a[j] - aj;
    for (std::size_t t = 0; t < n; ++t) G[t] += y[t] * (yi * K(t, i) * di + yj * K(t, j) * dj);
  }

  // Offset from free vectors, else the midpoint of the feasible interval.
  double sum = 0.0;
  std::size_t free = 0;
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    const bool at_upper = a[t] >= C, at_lower = a[t] <= 0;
    if (at_upper) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (at_lower) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      sum += yg;
      ++free;
    }
  }
  const double rho = free > 0 ? sum / static_cast<double>(free) : 0.5 * (ub + lb);
  out.b = -rho;
  return out;
}

double dual_objective(const KernelMatrix& K, std::span<const int> y, std::span<const double> alpha) {
  double quad = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < K.n; ++i) {
    lin += alpha[i];
    for (std::size_t j = 0; j < K.n; ++j) quad += alpha[i] * alpha[j] * y[i] * y[j] * K(i, j);
  }
  return 0.5 * quad - lin;
}

double kkt_violation(const KernelMatrix& K, std::span<const int> y, std::span<const double> alpha, double C) {
  const auto G = gradient(K, y, alpha);
  double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < K.n; ++t) {
    const double v = -y[t] * G[t];
    if (in_up(y[t], alpha[t], C)) gmax = std::max(gmax, v);
    if (in_low(y[t], alpha[t], C)) gmin = std::min(gmin, v);
  }
  if (!std::isfinite(gmax) || !std::isfinite(gmin)) return 0.0;
  return std::max(0.0, gmax - gmin);
}

double PlattSigmoid::operator()(double f) const noexcept {
  const double z = a * f + b;
  return z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

PlattSigmoid fit_platt(std::span<const double> decision, std::span<const std::uint8_t> positive) {
  const std::size_t n = decision.size();
  if (n == 0 || positive.size() != n) throw UsageError("sigmoid calibration needs matching, non-empty inputs");
  double np = 0, nn = 0;
  for (auto p : positive) (p ? np : nn) += 1;
  const double hi = (np + 1) / (np + 2), lo = 1 / (nn + 2);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = positive[i] ? hi : lo;

  double A = 0.0, B = std::log((nn + 1) / (np + 1));
  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = decision[i] * a + b;
      f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1) * z + std::log1p(std::exp(z));
    }
    return f;
  };
  double fval = objective(A, B);
  constexpr double sigma = 1e-12, min_step = 1e-10, eps = 1e-5;
  for (int it = 0; it < 100; ++it) {
    double h11 = sigma, h22 = sigma, h21 = 0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = decision[i] * A + B;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += decision[i] * decision[i] * d2;
      h22 += d2;
      h21 += decision[i] * d2;
      const double d1 = t[i] - p;
      g1 += decision[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < eps && std::abs(g2) < eps) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= min_step) {
      const double na = A + step * dA, nb = B + step * dB;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        A = na;
        B = nb;
        fval = nf;
        break;
      }
      step /= 2;
    }
    if (step < min_step) break;
  }
  return {A, B};
}

}  // namespace eqdf
