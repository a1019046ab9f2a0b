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

#include "eqdf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <set>

#include "eqdf/csv.hpp"
#include "eqdf/error.hpp"
#include "eqdf/wav.hpp"

namespace eqdf {

std::string_view to_string(Axis axis) noexcept {
  switch (axis) {
    case Axis::gender: return "gender";
    case Axis::age: return "age";
    case Axis::accent: return "accent";
  }
  return "?";
}

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

Axis axis_from_string(std::string_view s) {
  for (Axis a : kAxes)
    if (s == to_string(a)) return a;
  throw UsageError("unknown subgroup axis '" + std::string(s) + "' (expected gender, age or accent)");
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "validation" || s == "val" || s == "dev") return Split::validation;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + std::string(s) + "'");
}

SubgroupedDataset::SubgroupedDataset(std::size_t num_classes, std::size_t sample_rate, std::size_t length)
    : num_classes_(num_classes), sample_rate_(sample_rate), length_(length) {
  if (num_classes < 2) throw UsageError("a dataset needs at least 2 classes");
  if (sample_rate == 0 || length == 0) throw UsageError("sample rate and length must be positive");
}

void SubgroupedDataset::add(Sample s) {
  if (s.label < 0 || static_cast<std::size_t>(s.label) >= num_classes_)
    throw DataError("sample '" + s.id + "': label " + std::to_string(s.label) + " outside [0, " +
                    std::to_string(num_classes_) + ")");
  if (s.waveform.size() != length_)
    throw DataError("sample '" + s.id + "': waveform has " + std::to_string(s.waveform.size()) +
                    " samples, expected " + std::to_string(length_));
  for (double v : s.waveform)
    if (!std::isfinite(v) || v < -1.0 || v > 1.0)
      throw DataError("sample '" + s.id + "': waveform value outside [-1, 1]");
  for (auto& g : s.groups)
    if (g.empty()) g = kUnknownGroup;
  if (!ids_.emplace(s.id, samples_.size()).second) throw DataError("duplicate sample id '" + s.id + "'");
  samples_.push_back(std::move(s));
}

std::vector<std::size_t> SubgroupedDataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples_.size(); ++i)
    if (samples_[i].split == split) out.push_back(i);
  return out;
}

std::vector<std::size_t> SubgroupedDataset::all_indices() const {
  std::vector<std::size_t> out(samples_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

Tensor SubgroupedDataset::batch(std::span<const std::size_t> idx) const {
  Tensor t({idx.size(), length_});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& w = samples_.at(idx[r]).waveform;
    std::copy(w.begin(), w.end(), t.data.begin() + static_cast<std::ptrdiff_t>(r * length_));
  }
  return t;
}

std::vector<int> SubgroupedDataset::labels(std::span<const std::size_t> idx) const {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(samples_.at(i).label);
  return out;
}

SubgroupedDataset SubgroupedDataset::subset(std::span<const std::size_t> idx) const {
  SubgroupedDataset out(num_classes_, sample_rate_, length_);
  for (std::size_t i : idx) out.add(samples_.at(i));
  return out;
}

std::map<std::string, std::vector<std::size_t>> slice(const SubgroupedDataset& ds, Axis axis) {
  const auto all = ds.all_indices();
  return slice(ds, axis, all);
}

std::map<std::string, std::vector<std::size_t>> slice(const SubgroupedDataset& ds, Axis axis,
                                                      std::span<const std::size_t> idx) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i : idx) out[ds[i].group(axis)].push_back(i);
  for (auto& [g, v] : out) std::sort(v.begin(), v.end());
  return out;
}

std::vector<GroupCount> subgroup_stats(const SubgroupedDataset& ds) {
  if (ds.empty()) throw DataError("cannot compute subgroup statistics of an empty dataset");
  std::vector<GroupCount> out;
  for (Split split : kSplits) {
    const auto idx = ds.indices(split);
    if (idx.empty()) continue;
    const double n = static_cast<double>(idx.size());
    for (Axis axis : kAxes)
      for (const auto& [g, members] : slice(ds, axis, idx))
        out.push_back({std::string(to_string(axis)), g, split, members.size(), members.size() / n});
    std::map<std::string, std::size_t> inter;
    for (std::size_t i : idx) {
      const auto& s = ds[i];
      ++inter[s.groups[0] + "|" + s.groups[1] + "|" + s.groups[2]];
    }
    for (const auto& [g, c] : inter) out.push_back({"intersection", g, split, c, c / n});
  }
  return out;
}

std::string subgroup_stats_csv(const std::vector<GroupCount>& stats) {
  CsvWriter w({"split", "axis", "group", "count", "prevalence"});
  for (const auto& s : stats)
    w.row({std::string(to_string(s.split)), s.axis, s.group, std::to_string(s.count), format_double(s.prevalence)});
  return w.text();
}

namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

SubgroupedDataset load_manifest(const std::filesystem::path& path, std::size_t sample_rate, std::size_t length,
                                std::size_t num_classes) {
  const CsvTable table = read_csv(path);
  const std::string src = path.string();
  const std::size_t c_id = table.column("id"), c_split = table.column("split"), c_label = table.column("label"),
                    c_gender = table.column("gender"), c_age = table.column("age"),
                    c_accent = table.column("accent"), c_path = table.column("path");
  auto where = [&](std::size_t r) {
    return src + " row " + std::to_string(r + 1) + " (line " + std::to_string(table.line_numbers[r]) + ")";
  };

  bool numeric = true;
  std::set<std::string> names;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& l = table.rows[r][c_label];
    if (l.empty()) throw DataError(where(r) + ": empty label");
    names.insert(l);
    if (!parse_int(l)) numeric = false;
  }
  std::map<std::string, int> label_ids;
  if (!numeric) {
    int next = 0;
    for (const auto& n : names) label_ids[n] = next++;
  }
  std::size_t k = num_classes;
  if (k == 0) {
    int max_label = -1;
    if (numeric)
      for (const auto& n : names) max_label = std::max(max_label, *parse_int(n));
    else
      max_label = static_cast<int>(names.size()) - 1;
    k = static_cast<std::size_t>(std::max(max_label + 1, 2));
  }

  SubgroupedDataset ds(k, sample_rate, length);
  const auto base = path.parent_path();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Sample s;
    s.id = row[c_id];
    if (s.id.empty()) throw DataError(where(r) + ": empty id");
    try {
      s.split = split_from_string(row[c_split]);
    } catch (const DataError& e) {
      throw DataError(where(r) + ": " + e.what());
    }
    s.label = numeric ? *parse_int(row[c_label]) : label_ids.at(row[c_label]);
    s.groups = {row[c_gender], row[c_age], row[c_accent]};
    std::filesystem::path audio = row[c_path];
    if (audio.empty()) throw DataError(where(r) + ": empty path");
    if (audio.is_relative()) audio = base / audio;
    WavData wav;
    try {
      wav = read_wav(audio);
    } catch (const DataError& e) {
      throw DataError(where(r) + ": " + e.what());
    }
    s.waveform = resample_linear(wav.samples, wav.sample_rate, static_cast<std::uint32_t>(sample_rate));
    s.waveform.resize(length, 0.0);
    try {
      ds.add(std::move(s));
    } catch (const DataError& e) {
      throw DataError(where(r) + ": " + e.what());
    }
  }
  return ds;
}

void write_manifest(const SubgroupedDataset& ds, const std::filesystem::path& dir) {
  CsvWriter w({"id", "split", "label", "gender", "age", "accent", "path"});
  for (const auto& s : ds.samples()) {
    const std::string rel = "audio/" + s.id + ".wav";
    write_wav(dir / rel, static_cast<std::uint32_t>(ds.sample_rate()), s.waveform);
    w.row({s.id, std::string(to_string(s.split)), std::to_string(s.label), s.groups[0], s.groups[1], s.groups[2],
           rel});
  }
  w.save(dir / "manifest.csv");
}

}  // namespace eqdf
