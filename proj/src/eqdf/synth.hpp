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

#ifndef EQDF_SYNTH_HPP
#define EQDF_SYNTH_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqdf/dataset.hpp"

namespace eqdf {

/// One subgroup on one axis. `pitch_shift` scales every class frequency by
/// (1 + pitch_shift); `amplitude` multiplies the base amplitude; `noise` is
/// added to the base noise standard deviation.
struct GroupSpec {
  std::string name;
  double prevalence = 1.0;
  double pitch_shift = 0.0;
  double amplitude = 1.0;
  double noise = 0.0;
};

struct SynthSpec {
  std::size_t num_classes = 12;
  std::size_t sample_rate = 8000;
  std::size_t length = 1200;
  double base_freq = 300.0;
  double freq_step = 150.0;
  double base_amplitude = 0.5;
  double base_noise = 0.05;
  /// Per-sample relative frequency jitter, uniform in [-jitter, jitter].
  double freq_jitter = 0.0;
  /// Per-sample amplitude jitter, uniform factor in [1 - j, 1 + j].
  double amp_jitter = 0.0;
  /// Fraction of the clip tapered by a half-Hann window at each end.
  double taper = 0.1;

  std::array<std::vector<GroupSpec>, 3> axes;  // indexed by Axis
  std::size_t train_size = 480;
  std::size_t validation_size = 120;
  std::size_t test_size = 180;
  std::uint64_t seed = 0;

  /// 0 draws train/validation groups uniformly, 1 uses the declared
  /// prevalences, values in between interpolate linearly.
  double skew = 1.0;
  /// Scales every group's deviation (pitch shift, amplitude - 1, extra noise).
  double shift = 1.0;
  /// Test groups drawn uniformly so every subgroup is represented.
  bool uniform_test = true;
};

/// Three groups per axis with a skewed majority and shifted minorities.
SynthSpec default_synth_spec();

/// Throws UsageError for empty axes, non-positive or unnormalized
/// prevalences, zero sizes or a class frequency at or above Nyquist.
void validate(const SynthSpec& spec);

/// Frequency of class k for a group with the given pitch shift, before jitter.
double class_frequency(const SynthSpec& spec, std::size_t k, double pitch_shift = 0.0);

/// Effective group-drawing weights for one axis and split.
std::vector<double> group_weights(const SynthSpec& spec, Axis axis, Split split);

SubgroupedDataset synth_generate(const SynthSpec& spec);

nlohmann::json to_json(const SynthSpec& spec);

}  // namespace eqdf

#endif  // EQDF_SYNTH_HPP
