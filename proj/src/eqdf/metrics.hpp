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

#ifndef EQDF_METRICS_HPP
#define EQDF_METRICS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqdf/dataset.hpp"

namespace eqdf {

/// One subgroup's values along a curve's grid. n == 0 marks an absent group,
/// whose values are NaN and which is excluded from every aggregate.
struct SubgroupSeries {
  std::vector<double> values;
  std::size_t n = 0;

  bool present() const noexcept { return n > 0; }
};

/// Accuracy (robustness) or false-rejection rate (rejection) per subgroup
/// over an increasing grid of budgets or thresholds.
struct SubgroupCurve {
  Axis axis = Axis::gender;
  std::vector<double> grid;
  std::map<std::string, SubgroupSeries> groups;

  const SubgroupSeries& at(const std::string& group) const;
};

using RobustnessCurve = SubgroupCurve;
using RejectionCurve = SubgroupCurve;

/// Per-sample indicator grid ([grid point][sample]) averaged per subgroup.
/// Groups listed in `declared` but without samples are kept as absent.
SubgroupCurve curve_from_indicators(Axis axis, std::span<const double> grid,
                                    const std::vector<std::vector<std::uint8_t>>& hits,
                                    const std::vector<std::array<std::string, 3>>& sample_groups,
                                    const std::vector<std::string>& declared = {});

/// Trapezoidal rule; normalized results are divided by (x_max - x_min).
double trapezoid_auc(std::span<const double> x, std::span<const double> y, bool normalize = true);

double auc_acc(const RobustnessCurve& curve, const std::string& group, bool normalize = true);
double auc_fpr(const RejectionCurve& curve, const std::string& group, bool normalize = true);

/// max - min over the values; a single value gives 0.
double max_gap(const std::map<std::string, double>& values);
double defense_parity(const std::map<std::string, double>& auc_acc_by_group);
double fpr_parity(const std::map<std::string, double>& auc_fpr_by_group);
double accuracy_parity(const std::map<std::string, double>& clean_acc_by_group);

/// Pearson r, or nullopt when lengths differ, fewer than two points or either
/// input is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

enum class EncodingMode { binary, level };
std::string_view to_string(EncodingMode m) noexcept;

struct CorrelationCell {
  std::string intervention;
  EncodingMode mode = EncodingMode::binary;
  std::string target;
  std::optional<double> r;
};

/// For every (intervention, target) pair, the correlation across zoo rows of
/// the intervention column with the target column. encodings[row][i] follows
/// `interventions`; targets[name][row].
std::vector<CorrelationCell> intervention_correlation(const std::vector<std::string>& interventions,
                                                      const std::vector<std::vector<double>>& encodings,
                                                      const std::map<std::string, std::vector<double>>& targets,
                                                      EncodingMode mode);

/// Sample counts below this are flagged in reports.
inline constexpr std::size_t kLowCountThreshold = 5;

}  // namespace eqdf

#endif  // EQDF_METRICS_HPP
