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

#include "eqdf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eqdf/error.hpp"

namespace eqdf {

const SubgroupSeries& SubgroupCurve::at(const std::string& group) const {
  const auto it = groups.find(group);
  if (it == groups.end() || !it->second.present())
    throw DataError("subgroup '" + group + "' is not present on axis '" + std::string(to_string(axis)) + "'");
  return it->second;
}

SubgroupCurve curve_from_indicators(Axis axis, std::span<const double> grid,
                                    const std::vector<std::vector<std::uint8_t>>& hits,
                                    const std::vector<std::array<std::string, 3>>& sample_groups,
                                    const std::vector<std::string>& declared) {
  if (hits.size() != grid.size()) throw UsageError("indicator rows do not match the grid");
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (!(grid[g] > grid[g - 1])) throw UsageError("curve grid must be strictly increasing");
  SubgroupCurve c;
  c.axis = axis;
  c.grid.assign(grid.begin(), grid.end());
  const std::size_t a = static_cast<std::size_t>(axis);
  std::map<std::string, std::vector<std::size_t>> members;
  for (const auto& d : declared) members[d];
  for (std::size_t s = 0; s < sample_groups.size(); ++s) members[sample_groups[s][a]].push_back(s);
  for (const auto& [name, idx] : members) {
    SubgroupSeries& series = c.groups[name];
    series.n = idx.size();
    series.values.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    if (idx.empty()) continue;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (hits[g].size() != sample_groups.size()) throw UsageError("indicator row length does not match samples");
      std::size_t count = 0;
      for (std::size_t s : idx) count += hits[g][s];
      series.values[g] = static_cast<double>(count) / static_cast<double>(idx.size());
    }
  }
  return c;
}

double trapezoid_auc(std::span<const double> x, std::span<const double> y, bool normalize) {
  if (x.size() != y.size()) throw UsageError("trapezoid: x and y lengths differ");
  if (x.size() < 2) throw UsageError("trapezoid: at least two points are required");
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw UsageError("trapezoid: x must be strictly increasing");
    area += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  }
  return normalize ? area / (x.back() - x.front()) : area;
}

double auc_acc(const RobustnessCurve& curve, const std::string& group, bool normalize) {
  return trapezoid_auc(curve.grid, curve.at(group).values, normalize);
}

double auc_fpr(const RejectionCurve& curve, const std::string& group, bool normalize) {
  return trapezoid_auc(curve.grid, curve.at(group).values, normalize);
}

double max_gap(const std::map<std::string, double>& values) {
  if (values.empty()) throw UsageError("parity needs at least one subgroup");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [k, v] : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

double defense_parity(const std::map<std::string, double>& v) { return max_gap(v); }
double fpr_parity(const std::map<std::string, double>& v) { return max_gap(v); }
double accuracy_parity(const std::map<std::string, double>& v) { return max_gap(v); }

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string_view to_string(EncodingMode m) noexcept { return m == EncodingMode::binary ? "binary" : "level"; }

std::vector<CorrelationCell> intervention_correlation(const std::vector<std::string>& interventions,
                                                      const std::vector<std::vector<double>>& encodings,
                                                      const std::map<std::string, std::vector<double>>& targets,
                                                      EncodingMode mode) {
  if (encodings.size() < 2) throw UsageError("intervention correlation needs at least two zoo rows");
  for (const auto& row : encodings)
    if (row.size() != interventions.size()) throw UsageError("inconsistent intervention encodings across zoo rows");
  std::vector<CorrelationCell> out;
  for (std::size_t i = 0; i < interventions.size(); ++i) {
    std::vector<double> col;
    for (const auto& row : encodings) col.push_back(row[i]);
    for (const auto& [name, values] : targets) {
      if (values.size() != encodings.size())
        throw UsageError("target '" + name + "' has " + std::to_string(values.size()) + " rows, expected " +
                         std::to_string(encodings.size()));
      // Rows where the target is undefined (absent subgroup) are skipped.
      std::vector<double> xs, ys;
      for (std::size_t r = 0; r < values.size(); ++r)
        if (std::isfinite(values[r])) {
          xs.push_back(col[r]);
          ys.push_back(values[r]);
        }
      out.push_back({interventions[i], mode, name, pearson(xs, ys)});
    }
  }
  return out;
}

}  // namespace eqdf
