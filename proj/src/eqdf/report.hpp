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

#ifndef EQDF_REPORT_HPP
#define EQDF_REPORT_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace eqdf {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  /// Fixed y range; when lo == hi the range is fitted to the data.
  double y_lo = 0.0;
  double y_hi = 1.0;
  std::vector<ChartSeries> series;
};

/// Static SVG line chart, one polyline per series. Output depends only on
/// the input values.
std::string svg_line_chart(const ChartSpec& spec);

/// Renders report/report.md and the SVG charts from the CSVs of a run
/// directory. Throws DataError naming the stage whose output is missing.
void write_report(const std::filesystem::path& run_dir);

}  // namespace eqdf

#endif  // EQDF_REPORT_HPP
