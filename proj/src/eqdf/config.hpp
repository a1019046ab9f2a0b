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

#ifndef EQDF_CONFIG_HPP
#define EQDF_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eqdf/attack.hpp"
#include "eqdf/rejection.hpp"
#include "eqdf/synth.hpp"
#include "eqdf/training.hpp"

namespace eqdf {

enum class DataSource { synth, manifest };

struct ExperimentConfig {
  // [run]
  std::uint64_t seed = 0;
  unsigned threads = 1;

  // [data]
  DataSource source = DataSource::synth;
  std::filesystem::path manifest;
  std::size_t num_classes = 12;  // 0 infers from a manifest
  std::size_t sample_rate = 8000;
  std::size_t length = 1200;

  // [synth]
  SynthSpec synth = default_synth_spec();

  // [zoo]
  std::vector<std::string> zoo = kDefaultZoo;
  TrainConfig train;

  // [attack]
  std::vector<double> epsilons = kDefaultEpsilons;
  AttackConfig attack;
  std::size_t attack_samples = 0;  // 0 uses the whole test split

  // [reject]
  bool nr = true;
  NeuralRejectionOptions nr_options;
  bool rs = true;
  double rs_sigma = 0.1;
  std::vector<std::size_t> rs_draws{10, 100, 1000};
  double alpha_min = 0.001;
  double alpha_max = 1.0;
  double alpha_step = 1e-3;

  /// Copies run-level settings (seed, sizes) into the nested stage configs.
  void sync();
};

ExperimentConfig default_config();

/// Sectioned key = value text; '#' and ';' start comments. Unknown sections
/// or keys are usage errors so typos never pass silently.
ExperimentConfig parse_config(std::string_view text, const std::string& source);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Round-trips through parse_config.
std::string format_config(const ExperimentConfig& cfg);

/// Canonical description of the settings each stage depends on.
nlohmann::json data_stage_json(const ExperimentConfig& cfg);
nlohmann::json zoo_stage_json(const ExperimentConfig& cfg);
nlohmann::json attack_stage_json(const ExperimentConfig& cfg);
nlohmann::json reject_stage_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const ExperimentConfig& cfg);

std::string sha256_hex(std::string_view bytes);
std::string json_hash(const nlohmann::json& j);

}  // namespace eqdf

#endif  // EQDF_CONFIG_HPP
