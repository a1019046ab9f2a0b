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

#include "eqdf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

#include "eqdf/error.hpp"
#include "eqdf/rng.hpp"

namespace eqdf {

SynthSpec default_synth_spec() {
  SynthSpec s;
  s.axes[static_cast<std::size_t>(Axis::gender)] = {
      {"female", 0.25, 0.00, 1.00, 0.00},
      {"male", 0.71, 0.00, 1.00, 0.00},
      {"other", 0.04, 0.08, 0.80, 0.05},
  };
  s.axes[static_cast<std::size_t>(Axis::age)] = {
      {"young", 0.70, 0.00, 1.00, 0.00},
      {"middle", 0.20, 0.03, 1.00, 0.02},
      {"senior", 0.10, 0.10, 0.75, 0.06},
  };
  s.axes[static_cast<std::size_t>(Axis::accent)] = {
      {"us", 0.60, 0.00, 1.00, 0.00},
      {"england", 0.25, 0.02, 1.00, 0.01},
      {"india", 0.15, 0.06, 0.85, 0.04},
  };
  return s;
}

double class_frequency(const SynthSpec& spec, std::size_t k, double pitch_shift) {
  return (spec.base_freq + spec.freq_step * static_cast<double>(k)) * (1.0 + pitch_shift);
}

void validate(const SynthSpec& spec) {
  if (spec.num_classes < 2) throw UsageError("synth: num_classes must be at least 2");
  if (spec.sample_rate == 0 || spec.length == 0) throw UsageError("synth: sample_rate and length must be positive");
  if (spec.train_size == 0 || spec.validation_size == 0 || spec.test_size == 0)
    throw UsageError("synth: every split needs at least one sample");
  if (spec.skew < 0 || spec.skew > 1) throw UsageError("synth: skew must lie in [0, 1]");
  if (spec.shift < 0) throw UsageError("synth: shift must be non-negative");
  if (spec.base_noise < 0 || spec.freq_jitter < 0 || spec.freq_jitter >= 1 || spec.amp_jitter < 0 ||
      spec.amp_jitter >= 1)
    throw UsageError("synth: noise and jitter must be non-negative (jitter below 1)");
  if (spec.taper < 0 || spec.taper > 0.5) throw UsageError("synth: taper must lie in [0, 0.5]");
  const double nyquist = static_cast<double>(spec.sample_rate) / 2.0;
  double max_shift = 0.0;
  for (Axis axis : kAxes) {
    const auto& groups = spec.axes[static_cast<std::size_t>(axis)];
    const std::string a(to_string(axis));
    if (groups.empty()) throw UsageError("synth: axis '" + a + "' has no groups");
    double total = 0.0;
    for (const auto& g : groups) {
      if (g.name.empty()) throw UsageError("synth: axis '" + a + "' has an unnamed group");
      if (!(g.prevalence > 0)) throw UsageError("synth: group '" + g.name + "' needs a positive prevalence");
      if (g.amplitude <= 0 || g.noise < 0) throw UsageError("synth: group '" + g.name + "' has invalid amplitude/noise");
      if (1.0 + spec.shift * g.pitch_shift <= 0) throw UsageError("synth: group '" + g.name + "' pitch shift too negative");
      total += g.prevalence;
      max_shift = std::max(max_shift, spec.shift * g.pitch_shift);
    }
    if (std::abs(total - 1.0) > 1e-6)
      throw UsageError("synth: prevalences on axis '" + a + "' sum to " + std::to_string(total) + ", not 1");
  }
  // Shifts compose multiplicatively across the three axes.
  const double top = class_frequency(spec, spec.num_classes - 1) * std::pow(1.0 + max_shift, 3.0) *
                     (1.0 + spec.freq_jitter);
  if (top >= nyquist) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "synth: highest class frequency %.1f Hz reaches the Nyquist limit %.1f Hz", top,
                  nyquist);
    throw UsageError(buf);
  }
}

std::vector<double> group_weights(const SynthSpec& spec, Axis axis, Split split) {
  const auto& groups = spec.axes[static_cast<std::size_t>(axis)];
  const double uniform = 1.0 / static_cast<double>(groups.size());
  std::vector<double> w;
  for (const auto& g : groups) {
    if (split == Split::test && spec.uniform_test)
      w.push_back(uniform);
    else
      w.push_back((1.0 - spec.skew) * uniform + spec.skew * g.prevalence);
  }
  return w;
}

namespace {

std::size_t draw(Rng& rng, const std::vector<double>& w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double r = u(rng) * total;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (r < w[i]) return i;
    r -= w[i];
  }
  return w.size() - 1;
}

double envelope(std::size_t t, std::size_t n, double taper) {
  const double ramp = taper * static_cast<double>(n);
  if (ramp < 1.0) return 1.0;
  const double pos = std::min(static_cast<double>(t), static_cast<double>(n - 1 - t));
  if (pos >= ramp) return 1.0;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * pos / ramp));
}

}  // namespace

SubgroupedDataset synth_generate(const SynthSpec& spec) {
  validate(spec);
  SubgroupedDataset ds(spec.num_classes, spec.sample_rate, spec.length);
  const std::array<std::size_t, 3> sizes{spec.train_size, spec.validation_size, spec.test_size};
  std::uint64_t global = 0;
  for (Split split : kSplits) {
    std::array<std::vector<double>, 3> weights;
    for (Axis a : kAxes) weights[static_cast<std::size_t>(a)] = group_weights(spec, a, split);
    const std::size_t n = sizes[static_cast<std::size_t>(split)];
    for (std::size_t i = 0; i < n; ++i, ++global) {
      Rng rng = stream_rng(spec.seed, global);
      Sample s;
      char id[48];
      std::snprintf(id, sizeof id, "%s-%05zu", std::string(to_string(split)).c_str(), i);
      s.id = id;
      s.split = split;
      s.label = static_cast<int>(i % spec.num_classes);

      double pitch = 1.0, amp = spec.base_amplitude, noise = spec.base_noise;
      for (Axis a : kAxes) {
        const auto& groups = spec.axes[static_cast<std::size_t>(a)];
        const auto& g = groups[draw(rng, weights[static_cast<std::size_t>(a)])];
        s.groups[static_cast<std::size_t>(a)] = g.name;
        pitch *= 1.0 + spec.shift * g.pitch_shift;
        amp *= 1.0 + spec.shift * (g.amplitude - 1.0);
        noise += spec.shift * g.noise;
      }
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      const double freq = class_frequency(spec, static_cast<std::size_t>(s.label)) * pitch *
                          (1.0 + spec.freq_jitter * unit(rng));
      amp *= 1.0 + spec.amp_jitter * unit(rng);
      const double phi = phase(rng);
      std::normal_distribution<double> gauss(0.0, 1.0);
      const double w = 2.0 * std::numbers::pi * freq / static_cast<double>(spec.sample_rate);
      s.waveform.resize(spec.length);
      for (std::size_t t = 0; t < spec.length; ++t) {
        double v = amp * std::sin(w * static_cast<double>(t) + phi) * envelope(t, spec.length, spec.taper);
        if (noise > 0) v += noise * gauss(rng);
        s.waveform[t] = std::clamp(v, -1.0, 1.0);
      }
      ds.add(std::move(s));
    }
  }
  return ds;
}

nlohmann::json to_json(const SynthSpec& spec) {
  nlohmann::json axes = nlohmann::json::object();
  for (Axis a : kAxes) {
    auto& arr = axes[std::string(to_string(a))] = nlohmann::json::array();
    for (const auto& g : spec.axes[static_cast<std::size_t>(a)])
      arr.push_back({{"name", g.name},
                     {"prevalence", g.prevalence},
                     {"pitch_shift", g.pitch_shift},
                     {"amplitude", g.amplitude},
                     {"noise", g.noise}});
  }
  return {{"num_classes", spec.num_classes},   {"sample_rate", spec.sample_rate},
          {"length", spec.length},             {"base_freq", spec.base_freq},
          {"freq_step", spec.freq_step},       {"base_amplitude", spec.base_amplitude},
          {"base_noise", spec.base_noise},     {"freq_jitter", spec.freq_jitter},
          {"amp_jitter", spec.amp_jitter},     {"taper", spec.taper},
          {"axes", axes},                      {"train_size", spec.train_size},
          {"validation_size", spec.validation_size}, {"test_size", spec.test_size},
          {"seed", spec.seed},                 {"skew", spec.skew},
          {"shift", spec.shift},               {"uniform_test", spec.uniform_test}};
}

}  // namespace eqdf
