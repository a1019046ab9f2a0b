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

#ifndef EQDF_PIPELINE_HPP
#define EQDF_PIPELINE_HPP

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eqdf/config.hpp"
#include "eqdf/dataset.hpp"
#include "eqdf/metrics.hpp"
#include "eqdf/model.hpp"

namespace eqdf {

inline constexpr const char* kToolkitVersion = "0.1.0";

using Logger = std::function<void(const std::string&)>;

struct RunContext {
  ExperimentConfig cfg = default_config();
  std::filesystem::path out;
  bool force = false;
  Logger log;
};

/// Declared subgroup names per axis: every group in the dataset plus, for
/// synthetic data, every group of the generating spec.
using DeclaredGroups = std::array<std::vector<std::string>, 3>;
DeclaredGroups declared_groups(const SubgroupedDataset& ds, const ExperimentConfig& cfg);

/// Evaluation indices: the test split, truncated to `attack_samples` if set.
std::vector<std::size_t> evaluation_indices(const SubgroupedDataset& ds, std::size_t limit = 0);

struct GroupAuc {
  Axis axis = Axis::gender;
  std::string group;
  std::size_t n = 0;
  double auc = 0.0;  // NaN when absent
  double auc_raw = 0.0;
  double clean = 0.0;  // clean accuracy (robustness only)
};

struct AxisParity {
  Axis axis = Axis::gender;
  std::string metric;  // DP, AP, FPRP:<method>
  double value = 0.0;
};

struct AttackResult {
  std::string model_id;
  std::vector<RobustnessCurve> curves;  // one per axis
  std::vector<GroupAuc> aucs;
  std::vector<AxisParity> parity;       // DP and AP per axis
  std::vector<double> max_linf;         // per epsilon
  double clean_accuracy = 0.0;
  double attacked_accuracy_max = 0.0;   // at the largest epsilon
};

AttackResult attack_model(const Model& model, const std::string& model_id, const SubgroupedDataset& ds,
                          const ExperimentConfig& cfg, const DeclaredGroups& declared);

struct MethodRejection {
  std::string method;  // NR or RS-N<draws>
  std::size_t draws = 0;
  std::vector<RejectionCurve> curves;  // one per axis
  std::vector<GroupAuc> aucs;
  std::vector<AxisParity> parity;      // FPRP per axis
};

struct RejectResult {
  std::string model_id;
  std::vector<MethodRejection> methods;
  std::map<std::size_t, std::vector<std::vector<std::uint32_t>>> rs_counts;  // draws -> [sample][class]
  std::vector<std::string> sample_ids;
};

/// Neural rejection (fit on train features, calibrated on validation) and, if
/// `run_rs`, randomized smoothing at every configured draw count.
RejectResult reject_model(const Classifier& model, const std::string& model_id, const SubgroupedDataset& ds,
                          const ExperimentConfig& cfg, const DeclaredGroups& declared, bool run_nr, bool run_rs);

/// Throws if any curve breaks the expected monotonicity in the threshold.
void check_rejection_monotone(const MethodRejection& m);

/// Stages. Each is a no-op when its stamp matches the current settings.
void run_synth(const RunContext& ctx);
void run_zoo(const RunContext& ctx);
void run_attack_sweep(const RunContext& ctx);
void run_reject_sweep(const RunContext& ctx);
void run_report(const RunContext& ctx);
void run_all(const RunContext& ctx);

/// Loads the stage's dataset (synthetic output or the configured manifest).
SubgroupedDataset load_run_dataset(const RunContext& ctx);

}  // namespace eqdf

#endif  // EQDF_PIPELINE_HPP
