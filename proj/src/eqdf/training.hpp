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

#ifndef EQDF_TRAINING_HPP
#define EQDF_TRAINING_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eqdf/dataset.hpp"
#include "eqdf/model.hpp"
#include "eqdf/rng.hpp"

namespace eqdf {

struct AdvTrainConfig {
  double epsilon = 0.1;
  int steps = 10;
  std::optional<double> step_size;  // defaults to epsilon / 5
  double lambda = 0.5;              // weight of the clean loss

  bool operator==(const AdvTrainConfig&) const = default;
};

enum class SelectionCriterion { min_val_loss, joint_clean_attacked };

std::string_view to_string(SelectionCriterion c) noexcept;

struct TrainConfig {
  int epochs = 20;
  double initial_lr = 1e-3;
  double lr_decay = 0.9;
  int decay_period = 5;
  double noise_sigma = 0.0;
  std::optional<AdvTrainConfig> adv;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  /// Unset picks min_val_loss for standard runs and the joint criterion when
  /// adversarial training is on.
  std::optional<SelectionCriterion> selection;
  /// Attack steps used to score validation robustness (adv runs only).
  int val_attack_steps = 10;

  SelectionCriterion effective_selection() const noexcept;
};

void validate(const TrainConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  std::optional<double> val_attacked_acc;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  SelectionCriterion criterion = SelectionCriterion::min_val_loss;
  std::size_t selected = 0;
};

/// Columns epoch, lr, loss, val_acc, val_attacked_acc; loss is the
/// validation loss and val_attacked_acc is empty for standard runs.
std::string history_csv(const TrainHistory& h);

/// Adds i.i.d. N(0, sigma^2) to every element. sigma == 0 returns the input
/// untouched and draws nothing from `rng`.
Tensor noise_augment(const Tensor& batch, double sigma, Rng& rng);

/// Epoch index maximizing the criterion; ties go to the earliest epoch.
std::size_t select_model(const TrainHistory& history, SelectionCriterion criterion);
std::size_t select_model(std::span<const double> val_losses);
std::size_t select_model(std::span<const double> clean_acc, std::span<const double> attacked_acc);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains in place with Adam and the step-decay schedule and leaves the model
/// at the selected epoch's parameters. Each batch's loss is
/// lambda * L(clean) + (1 - lambda) * L(PGD) when adversarial training is on;
/// adversaries are crafted against the current parameters in train mode.
TrainHistory train(Classifier& model, const SubgroupedDataset& ds, const TrainConfig& cfg,
                   const EpochCallback& on_epoch = {});

/// Trains only the linear head of a probe on frozen encoder features.
TrainHistory train_probe(ProbeClassifier& model, const SubgroupedDataset& ds, const TrainConfig& cfg);

/// Binary flags and continuous levels used for correlation analysis.
struct Intervention {
  bool tricks = false;
  double noise_sigma = 0.0;
  double at_epsilon = 0.0;
  bool pretrained = false;

  bool na() const noexcept { return noise_sigma > 0; }
  bool at() const noexcept { return at_epsilon > 0; }
  bool operator==(const Intervention&) const = default;
};

inline const std::vector<std::string> kInterventionNames{"NA", "AT", "T", "PT"};
/// Binary encoding in kInterventionNames order.
std::vector<double> binary_encoding(const Intervention& iv);

struct ZooEntry {
  std::string name;
  Intervention iv;
};

/// Parses names such as M5, M5-NA3, M5-T-AT.1 or M5-T-AT.01NA1. NA<d> means
/// sigma = d / 10; AT<.x> is the training budget.
ZooEntry parse_zoo_name(std::string_view name);
std::vector<ZooEntry> parse_zoo(const std::vector<std::string>& names);

inline const std::vector<std::string> kDefaultZoo{"M5",         "M5-NA1",    "M5-NA3",        "M5-T",
                                                  "M5-T-AT.01", "M5-T-AT.1", "M5-T-AT.1-NA1", "M5-NA5"};

/// Training settings for one zoo entry derived from a shared base.
TrainConfig entry_config(const ZooEntry& entry, const TrainConfig& base, std::size_t index);

struct ZooResult {
  ZooEntry entry;
  std::optional<Classifier> model;
  TrainHistory history;
  std::string error;  // non-empty when training failed
};

/// Trains every entry; rows are independent (seed = base seed + row index)
/// and a failing row is recorded rather than aborting the others. `on_done`
/// may be invoked from worker threads.
std::vector<ZooResult> build_zoo(const SubgroupedDataset& ds, const std::vector<ZooEntry>& entries,
                                 const TrainConfig& base, unsigned threads = 1,
                                 const std::function<void(const ZooResult&)>& on_done = {});

}  // namespace eqdf

#endif  // EQDF_TRAINING_HPP
