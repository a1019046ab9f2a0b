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

#include "eqdf/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "eqdf/csv.hpp"
#include "eqdf/error.hpp"

namespace fs = std::filesystem;

namespace eqdf {

namespace {

constexpr double kW = 720, kH = 440, kLeft = 70, kRight = 180, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                                    "#e6ab02", "#a6761d", "#666666", "#1f78b4", "#b2df8a"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string svg_line_chart(const ChartSpec& spec) {
  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = spec.y_lo, y1 = spec.y_hi;
  const bool fit_y = spec.y_lo == spec.y_hi;
  if (fit_y) {
    y0 = 0.0;
    y1 = -INFINITY;
  }
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw UsageError("chart series '" + s.name + "' has mismatched x and y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (spec.log_x && !(s.x[i] > 0)) throw UsageError("log-scale chart needs positive x values");
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      if (fit_y) {
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (!std::isfinite(y1) || y1 <= y0) y1 = y0 + 1;
  if (fit_y) y1 += 0.05 * (y1 - y0);
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW) + "\" height=\"" + fmt(kH) +
       "\" viewBox=\"0 0 " + fmt(kW) + " " + fmt(kH) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fmt(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + xml_escape(spec.title) +
       "</text>\n";
  o += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
       "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fy = y0 + (y1 - y0) * i / 5.0;
    const double fxv = x0 + (x1 - x0) * i / 5.0;
    const double xv = spec.log_x ? std::pow(10.0, fxv) : fxv;
    o += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(py(fy)) + "\" x2=\"" + fmt(kLeft + pw) + "\" y2=\"" +
         fmt(py(fy)) + "\" stroke=\"#ddd\"/>\n";
    o += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(py(fy) + 4) + "\" text-anchor=\"end\">" +
         tick_label(std::round(fy * 1e4) / 1e4) + "</text>\n";
    o += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + fmt(kTop + ph + 18) + "\" text-anchor=\"middle\">" +
         tick_label(std::round(xv * 1e4) / 1e4) + "</text>\n";
  }
  o += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kH - 14) + "\" text-anchor=\"middle\">" +
       xml_escape(spec.x_label) + "</text>\n";
  o += "<text transform=\"translate(18 " + fmt(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       xml_escape(spec.y_label) + "</text>\n";
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& ser = spec.series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    o += "<polyline class=\"series\" data-name=\"" + xml_escape(ser.name) + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ser.x.size(); ++i) o += (i ? " " : "") + fmt(px(ser.x[i])) + "," + fmt(py(ser.y[i]));
    o += "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    o += "<line x1=\"" + fmt(kW - kRight + 12) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" + fmt(kW - kRight + 32) +
         "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + fmt(kW - kRight + 38) + "\" y=\"" + fmt(ly) + "\">" + xml_escape(ser.name) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

namespace {

CsvTable require(const fs::path& run, const std::string& rel, const std::string& stage) {
  std::error_code ec;
  if (!fs::exists(run / rel, ec))
    throw DataError("report: missing " + rel + " (run the " + stage + " stage first)");
  return read_csv(run / rel);
}

std::string safe(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_')) c = '_';
  return s;
}

double num(const std::string& s) { return std::stod(s); }

struct SeriesKey {
  std::string a, b, c;
  auto operator<=>(const SeriesKey&) const = default;
};

/// Series grouped by (chart key) -> ordered subgroup -> points, keeping the
/// first-seen order of charts.
struct ChartGroups {
  std::vector<SeriesKey> order;
  std::map<SeriesKey, std::map<std::string, ChartSeries>> charts;

  void add(const SeriesKey& key, const std::string& series, double x, double y) {
    if (!charts.count(key)) order.push_back(key);
    auto& s = charts[key][series];
    s.name = series;
    s.x.push_back(x);
    s.y.push_back(y);
  }
};

std::string md_row(const std::vector<std::string>& cells) {
  std::string o = "|";
  for (const auto& c : cells) o += " " + (c.empty() ? std::string("n/a") : c) + " |";
  return o + "\n";
}

std::string md_header(const std::vector<std::string>& cells) {
  std::string o = md_row(cells) + "|";
  for (std::size_t i = 0; i < cells.size(); ++i) o += "---|";
  return o + "\n";
}

}  // namespace

void write_report(const fs::path& run) {
  const CsvTable zoo = require(run, "models/zoo.csv", "zoo");
  const CsvTable rob = require(run, "attack/robustness_curve.csv", "attack-sweep");
  const CsvTable aacc = require(run, "attack/auc_acc.csv", "attack-sweep");
  const CsvTable corr = require(run, "attack/correlations.csv", "attack-sweep");
  const CsvTable fpr = require(run, "reject/fpr_curve.csv", "reject-sweep");
  const CsvTable afpr = require(run, "reject/auc_fpr.csv", "reject-sweep");
  const CsvTable cmp = require(run, "reject/fprp_comparison.csv", "reject-sweep");
  const CsvTable size = require(run, "reject/fpr_size_correlations.csv", "reject-sweep");

  const fs::path dir = run / "report";
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  std::vector<std::string> chart_files;

  // Accuracy vs budget, one chart per (model, axis).
  {
    ChartGroups g;
    const auto m = rob.column("model_id"), ax = rob.column("subgroup_axis"), sg = rob.column("subgroup"),
               e = rob.column("epsilon"), acc = rob.column("accuracy");
    for (const auto& r : rob.rows)
      if (r[acc] != "NA") g.add({r[m], r[ax], ""}, r[sg], num(r[e]), num(r[acc]));
    for (const auto& k : g.order) {
      ChartSpec spec{"Accuracy under attack: " + k.a + " by " + k.b, "epsilon", "accuracy", false, 0, 1, {}};
      for (auto& [name, s] : g.charts[k]) spec.series.push_back(s);
      const std::string file = "robustness_" + safe(k.a) + "_" + safe(k.b) + ".svg";
      write_file(dir / file, svg_line_chart(spec));
      chart_files.push_back(file);
    }
  }
  // False rejection vs threshold, one chart per (method, model, axis).
  {
    ChartGroups g;
    const auto me = fpr.column("method"), m = fpr.column("model_id"), ax = fpr.column("subgroup_axis"),
               sg = fpr.column("subgroup"), a = fpr.column("alpha"), v = fpr.column("fpr");
    for (const auto& r : fpr.rows)
      if (r[v] != "NA") g.add({r[me], r[m], r[ax]}, r[sg], num(r[a]), num(r[v]));
    for (const auto& k : g.order) {
      ChartSpec spec{"False rejection: " + k.a + ", " + k.b + " by " + k.c, "alpha", "FPR", false, 0, 1, {}};
      for (auto& [name, s] : g.charts[k]) spec.series.push_back(s);
      const std::string file = "fpr_" + safe(k.a) + "_" + safe(k.b) + "_" + safe(k.c) + ".svg";
      write_file(dir / file, svg_line_chart(spec));
      chart_files.push_back(file);
    }
  }
  // AUC_FPR against the number of smoothing draws, one chart per (model, axis).
  {
    ChartGroups g;
    const auto me = afpr.column("method"), m = afpr.column("model_id"), ax = afpr.column("subgroup_axis"),
               sg = afpr.column("subgroup"), v = afpr.column("auc_fpr");
    for (const auto& r : afpr.rows)
      if (r[me].rfind("RS-N", 0) == 0 && r[v] != "NA")
        g.add({r[m], r[ax], ""}, r[sg], num(r[me].substr(4)), num(r[v]));
    for (const auto& k : g.order) {
      ChartSpec spec{"Smoothing AUC_FPR vs draws: " + k.a + " by " + k.b, "draws (log scale)", "AUC_FPR", true, 0, 0,
                     {}};
      for (auto& [name, s] : g.charts[k]) spec.series.push_back(s);
      const std::string file = "auc_fpr_vs_draws_" + safe(k.a) + "_" + safe(k.b) + ".svg";
      write_file(dir / file, svg_line_chart(spec));
      chart_files.push_back(file);
    }
  }

  std::string md = "# Subgroup parity report\n\n";
  md += "## Models\n\n";
  md += md_header({"model", "status", "selected epoch", "val acc", "val attacked acc"});
  for (const auto& r : zoo.rows)
    md += md_row({r[zoo.column("model_id")], r[zoo.column("status")], r[zoo.column("selected_epoch")],
                  r[zoo.column("val_acc")], r[zoo.column("val_attacked_acc")]});

  md += "\n## Defense and accuracy parity\n\n";
  md += md_header({"model", "axis", "metric", "value"});
  std::vector<std::string> models;
  for (const auto& r : zoo.rows)
    if (r[zoo.column("status")] == "ok") models.push_back(r[zoo.column("model_id")]);
  for (const auto& m : models) {
    const fs::path p = run / "attack" / m / "parity.csv";
    if (!fs::exists(p, ec)) continue;
    const CsvTable t = read_csv(p);
    for (const auto& r : t.rows) md += md_row({m, r[0], r[1], r[2]});
  }

  md += "\n## AUC_acc by subgroup\n\n";
  md += md_header({"model", "axis", "subgroup", "AUC_acc", "clean acc", "n", "low count"});
  for (const auto& r : aacc.rows)
    md += md_row({r[aacc.column("model_id")], r[aacc.column("subgroup_axis")], r[aacc.column("subgroup")],
                  r[aacc.column("auc_acc")], r[aacc.column("clean_acc")], r[aacc.column("n_samples")],
                  r[aacc.column("low_count")]});

  for (const std::string mode : {"binary", "level"}) {
    md += "\n## Intervention correlations (" + mode + ")\n\n";
    md += md_header({"intervention", "target", "r", "defined"});
    for (const auto& r : corr.rows)
      if (r[corr.column("mode")] == mode)
        md += md_row({r[corr.column("intervention")], r[corr.column("subgroup_or_axis")], r[corr.column("r")],
                      r[corr.column("defined")]});
  }

  md += "\n## FPR parity by method\n\n";
  {
    std::vector<std::string> methods;
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>> pivot;
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& r : cmp.rows) {
      const std::string& me = r[cmp.column("method")];
      if (std::find(methods.begin(), methods.end(), me) == methods.end()) methods.push_back(me);
      const auto key = std::pair{r[cmp.column("model_id")], r[cmp.column("axis")]};
      if (!pivot.count(key)) rows.push_back(key);
      pivot[key][me] = r[cmp.column("fprp")];
    }
    std::vector<std::string> head{"model", "axis"};
    head.insert(head.end(), methods.begin(), methods.end());
    md += md_header(head);
    for (const auto& key : rows) {
      std::vector<std::string> cells{key.first, key.second};
      for (const auto& me : methods) {
        const auto it = pivot[key].find(me);
        cells.push_back(it == pivot[key].end() ? "" : it->second);
      }
      md += md_row(cells);
    }
  }

  md += "\n## AUC_FPR by subgroup\n\n";
  md += md_header({"method", "model", "axis", "subgroup", "AUC_FPR", "n", "train count", "low count"});
  for (const auto& r : afpr.rows)
    md += md_row({r[afpr.column("method")], r[afpr.column("model_id")], r[afpr.column("subgroup_axis")],
                  r[afpr.column("subgroup")], r[afpr.column("auc_fpr")], r[afpr.column("n_samples")],
                  r[afpr.column("train_count")], r[afpr.column("low_count")]});

  md += "\n## Training-set size vs AUC_FPR\n\n";
  md += md_header({"method", "model", "groups", "r", "defined"});
  for (const auto& r : size.rows)
    md += md_row({r[size.column("method")], r[size.column("model_id")], r[size.column("n_groups")],
                  r[size.column("r")], r[size.column("defined")]});

  md += "\n## Charts\n\n";
  for (const auto& f : chart_files) md += "- [" + f + "](" + f + ")\n";
  write_file(dir / "report.md", md);
}

}  // namespace eqdf
