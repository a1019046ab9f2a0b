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

#ifndef EQDF_DATASET_HPP
#define EQDF_DATASET_HPP

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqdf/tensor.hpp"

namespace eqdf {

enum class Axis { gender, age, accent };
inline constexpr std::array<Axis, 3> kAxes{Axis::gender, Axis::age, Axis::accent};

enum class Split { train, validation, test };
inline constexpr std::array<Split, 3> kSplits{Split::train, Split::validation, Split::test};

std::string_view to_string(Axis axis) noexcept;
std::string_view to_string(Split split) noexcept;
Axis axis_from_string(std::string_view s);
/// Accepts train, validation (or val, dev) and test.
Split split_from_string(std::string_view s);

inline constexpr std::string_view kUnknownGroup = "unknown";

struct Sample {
  std::string id;
  Split split = Split::train;
  int label = 0;
  std::array<std::string, 3> groups;  // indexed by Axis
  std::vector<double> waveform;

  const std::string& group(Axis axis) const { return groups[static_cast<std::size_t>(axis)]; }
};

/// Fixed-length labelled waveforms with three subgroup labels each.
/// Immutable once built; all accessors are safe for concurrent readers.
class SubgroupedDataset {
 public:
  SubgroupedDataset() = default;
  SubgroupedDataset(std::size_t num_classes, std::size_t sample_rate, std::size_t length);

  /// Validates label range, length, finiteness and the [-1, 1] range. Empty
  /// group labels become "unknown"; ids must be unique.
  void add(Sample sample);

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_.at(i); }
  const std::vector<Sample>& samples() const noexcept { return samples_; }

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t sample_rate() const noexcept { return sample_rate_; }
  std::size_t length() const noexcept { return length_; }

  std::vector<std::size_t> indices(Split split) const;
  std::vector<std::size_t> all_indices() const;
  /// Shape (n, length).
  Tensor batch(std::span<const std::size_t> idx) const;
  std::vector<int> labels(std::span<const std::size_t> idx) const;

  /// Copy restricted to the given indices, in order.
  SubgroupedDataset subset(std::span<const std::size_t> idx) const;

 private:
  std::size_t num_classes_ = 0;
  std::size_t sample_rate_ = 0;
  std::size_t length_ = 0;
  std::vector<Sample> samples_;
  std::map<std::string, std::size_t, std::less<>> ids_;
};

/// Partition of the given samples by their group on one axis. Indices are in
/// ascending order within each group.
std::map<std::string, std::vector<std::size_t>> slice(const SubgroupedDataset& ds, Axis axis);
std::map<std::string, std::vector<std::size_t>> slice(const SubgroupedDataset& ds, Axis axis,
                                                      std::span<const std::size_t> idx);

struct GroupCount {
  std::string axis;  // "gender", "age", "accent" or "intersection"
  std::string group;  // intersections are "gender|age|accent"
  Split split = Split::train;
  std::size_t count = 0;
  double prevalence = 0.0;
};

/// Per (axis, group, split) counts and within-split prevalences, followed by
/// the three-axis intersection counts. Splits with no samples are omitted.
std::vector<GroupCount> subgroup_stats(const SubgroupedDataset& ds);
std::string subgroup_stats_csv(const std::vector<GroupCount>& stats);

/// Reads a manifest with columns id, split, label, gender, age, accent, path.
/// Relative paths resolve against the manifest's directory. Audio is
/// resampled to `sample_rate` and then cropped or zero-padded to `length`.
/// Integer labels are used as-is; otherwise the distinct label strings are
/// numbered in sorted order. `num_classes` of 0 infers the class count.
SubgroupedDataset load_manifest(const std::filesystem::path& path, std::size_t sample_rate, std::size_t length,
                                std::size_t num_classes = 0);

/// Writes `manifest.csv` plus one PCM16 WAV per sample under `dir/audio`.
void write_manifest(const SubgroupedDataset& ds, const std::filesystem::path& dir);

}  // namespace eqdf

#endif  // EQDF_DATASET_HPP
