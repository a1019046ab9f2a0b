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

#ifndef EQDF_TESTS_ORACLES_HPP
#define EQDF_TESTS_ORACLES_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace eqdf::testing {

// Midpoint Riemann sum with cells aligned to the knots, so every cell lies
// inside one linear piece.
inline double riemann(const std::vector<double>& x, const std::vector<double>& y, std::size_t cells) {
  const double lo = x.front(), hi = x.back(), w = (hi - lo) / static_cast<double>(cells);
  long double sum = 0.0L;
  std::size_t seg = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double mid = lo + (static_cast<double>(c) + 0.5) * w;
    while (seg + 2 < x.size() && mid > x[seg + 1]) ++seg;
    const double t = (mid - x[seg]) / (x[seg + 1] - x[seg]);
    sum += static_cast<long double>(y[seg] + t * (y[seg + 1] - y[seg])) * w;
  }
  return static_cast<double>(sum / (hi - lo));
}

inline double direct_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = static_cast<long double>(x.size());
  long double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
  }
  return static_cast<double>((n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
}


/// Two-sided p-values for every k in [0, n] by enumerating all 2^n outcomes.
inline std::vector<double> enumerated_two_sided_p(std::uint64_t n) {
  std::vector<double> at_least(n + 2, 0.0);
  for (std::uint64_t outcome = 0; outcome < (1ULL << n); ++outcome)
    for (std::uint64_t j = 0; j <= static_cast<std::uint64_t>(std::popcount(outcome)); ++j) at_least[j] += 1;
  std::vector<double> p(n + 1);
  for (std::uint64_t k = 0; k <= n; ++k)
    p[k] = std::min(1.0, 2.0 * at_least[std::max(k, n - k)] / static_cast<double>(1ULL << n));
  return p;
}

}  // namespace eqdf::testing

#endif  // EQDF_TESTS_ORACLES_HPP
