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

#ifndef EQDF_ATTACK_HPP
#define EQDF_ATTACK_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eqdf/dataset.hpp"
#include "eqdf/model.hpp"

namespace eqdf {

struct AttackConfig {
  double epsilon = 0.0;
  int steps = 50;
  std::optional<double> step_size;  // defaults to epsilon / 5
  bool random_start = false;
  std::optional<std::pair<double, double>> clamp = std::pair{-1.0, 1.0};
  std::uint64_t seed = 0;  // random start only

  double effective_step() const noexcept { return step_size ? *step_size : epsilon / 5.0; }
};

/// Throws UsageError on epsilon < 0, steps < 1 or a non-positive step.
void validate(const AttackConfig& cfg);

/// Untargeted L-inf PGD on the cross-entropy. Each row is attacked on its own
/// so results never depend on batch composition.
Tensor pgd(const Model& model, const Tensor& x, std::span<const int> labels, const AttackConfig& cfg,
           unsigned threads = 1);

/// Projects `x_adv` onto the epsilon ball around `x`, then onto the clamp range.
void project(std::span<double> x_adv, std::span<const double> x, double epsilon,
             const std::optional<std::pair<double, double>>& clamp) noexcept;

/// Per-sample correctness for each attack budget.
struct CorrectnessGrid {
  std::vector<double> epsilons;
  std::vector<std::size_t> samples;  // dataset indices
  std::vector<std::string> ids;
  std::vector<std::array<std::string, 3>> groups;
  std::vector<std::vector<std::uint8_t>> correct;  // [epsilon][sample]
  std::vector<double> max_linf;                    // largest |x_adv - x| seen per epsilon

  double accuracy(std::size_t e) const;
};

/// Runs `tmpl` at every budget over the given samples. epsilon 0 is scored on
/// clean inputs. Work is split into (epsilon, shard) jobs.
CorrectnessGrid attack_sweep(const Model& model, const SubgroupedDataset& ds, std::span<const std::size_t> idx,
                             std::span<const double> epsilons, const AttackConfig& tmpl, unsigned threads = 1);

inline const std::vector<double> kDefaultEpsilons{0.0, 1e-4, 1e-3, 0.01, 0.1, 0.2, 0.3};

}  // namespace eqdf

#endif  // EQDF_ATTACK_HPP
