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

#ifndef EQDF_MODEL_HPP
#define EQDF_MODEL_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqdf/layers.hpp"

namespace eqdf {

/// Anything that classifies fixed-length waveforms. Attacks need
/// has_input_gradients(); rejection and metrics only need logits().
class Model {
 public:
  virtual ~Model() = default;
  virtual std::size_t num_classes() const = 0;
  virtual std::size_t input_len() const = 0;
  /// Eval-mode logits, shape (batch, num_classes).
  virtual Tensor logits(const Tensor& batch) const = 0;
  virtual bool has_input_gradients() const { return false; }
  /// Eval-mode mean cross-entropy and its input gradient.
  virtual BackwardResult input_gradient(const Tensor& batch, std::span<const int> labels) const;
};

/// Produces the fixed-length representation fed to a network's last layer.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::size_t feature_dim() const = 0;
  virtual std::size_t input_len() const = 0;
  /// (batch, feature_dim), eval-mode statistics.
  virtual Tensor extract(const Tensor& batch) const = 0;
};

enum class M5Variant { standard, tricks };

using ChannelPlan = std::array<std::size_t, 4>;
inline constexpr ChannelPlan kMiniPlan{16, 16, 32, 32};
inline constexpr std::size_t kM5FirstKernel = 80;
inline constexpr std::size_t kM5FirstStride = 4;
inline constexpr std::size_t kM5Pool = 4;

/// A sequential network plus the metadata needed to use and persist it.
class Classifier final : public Model, public FeatureExtractor {
 public:
  Classifier() = default;
  Classifier(std::string arch_id, Network net, std::string feature_layer, std::size_t sample_rate = 8000);

  const std::string& arch_id() const noexcept { return arch_id_; }
  const std::string& feature_layer() const noexcept { return feature_layer_; }
  std::size_t sample_rate() const noexcept { return sample_rate_; }
  Network& net() noexcept { return net_; }
  const Network& net() const noexcept { return net_; }

  /// Free-form provenance (seeds, training config, intervention tags).
  nlohmann::json& metadata() noexcept { return metadata_; }
  const nlohmann::json& metadata() const noexcept { return metadata_; }

  std::size_t num_classes() const override;
  std::size_t input_len() const override;
  Tensor logits(const Tensor& batch) const override;
  bool has_input_gradients() const override { return true; }
  BackwardResult input_gradient(const Tensor& batch, std::span<const int> labels) const override;

  std::size_t feature_dim() const override;
  Tensor extract(const Tensor& batch) const override;

 private:
  std::string arch_id_;
  Network net_;
  std::string feature_layer_;
  std::size_t sample_rate_ = 8000;
  nlohmann::json metadata_ = nlohmann::json::object();
};

/// Smallest waveform length the M5 pooling chain accepts.
std::size_t m5_min_input_len();

/// Four conv blocks (conv1d, batchnorm, ReLU, maxpool 4), global average pool
/// and a linear head. The tricks variant drops batchnorm and uses SiLU.
Classifier build_m5_mini(M5Variant variant, std::size_t num_classes, std::size_t input_len, std::uint64_t seed,
                         ChannelPlan plan = kMiniPlan, std::size_t sample_rate = 8000);

/// Argmax of the logits; ties go to the lowest class index.
std::vector<int> predict(const Model& model, const Tensor& batch);
std::vector<int> argmax_rows(const Tensor& logits);

/// Penultimate representation (output of the named feature layer).
Tensor features(const Classifier& model, const Tensor& batch);

/// A linear head over an external, frozen feature extractor. Stands in for a
/// pretrained encoder; it exposes no input gradients.
class ProbeClassifier final : public Model {
 public:
  ProbeClassifier(std::shared_ptr<const FeatureExtractor> encoder, std::size_t num_classes, std::uint64_t seed);

  const FeatureExtractor& encoder() const noexcept { return *encoder_; }
  Network& head() noexcept { return head_; }
  const Network& head() const noexcept { return head_; }

  std::size_t num_classes() const override;
  std::size_t input_len() const override { return encoder_->input_len(); }
  Tensor logits(const Tensor& batch) const override;

 private:
  std::shared_ptr<const FeatureExtractor> encoder_;
  Network head_;
};

// EQDF checkpoint: "EQDF", u16 version, u32 header length, JSON header, then
// little-endian float64 tensors (parameters, then buffers) in declared order.
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Classifier& model);
Classifier decode_checkpoint(std::string_view bytes);
void save_checkpoint(const Classifier& model, const std::filesystem::path& path);
Classifier load_checkpoint(const std::filesystem::path& path);

nlohmann::json layer_to_json(const LayerSpec& spec);
LayerSpec layer_from_json(const nlohmann::json& j);

}  // namespace eqdf

#endif  // EQDF_MODEL_HPP
