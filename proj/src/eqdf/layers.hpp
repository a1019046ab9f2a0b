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

#ifndef EQDF_LAYERS_HPP
#define EQDF_LAYERS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqdf/rng.hpp"
#include "eqdf/tensor.hpp"

namespace eqdf {

enum class LayerKind { conv1d, linear, relu, silu, batchnorm1d, maxpool1d, globalavgpool, softmax_xent };

std::string_view to_string(LayerKind kind) noexcept;
LayerKind layer_kind_from_string(std::string_view name);

/// One entry of a sequential network. Fields not used by a kind stay at their
/// defaults; `kernel` doubles as the pool width for maxpool1d.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  double eps = 1e-5;
  double momentum = 0.1;

  static LayerSpec conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride = 1,
                          std::size_t padding = 0, std::string name = {});
  static LayerSpec linear(std::size_t in_features, std::size_t out_features, std::string name = {});
  static LayerSpec relu(std::string name = {});
  static LayerSpec silu(std::string name = {});
  static LayerSpec batchnorm1d(std::size_t channels, double eps = 1e-5, double momentum = 0.1,
                               std::string name = {});
  static LayerSpec maxpool1d(std::size_t width, std::string name = {});
  static LayerSpec globalavgpool(std::string name = {});
  static LayerSpec softmax_xent(std::string name = {});

  bool operator==(const LayerSpec&) const = default;
};

/// Per-sample activation shape. length == 0 marks a flat feature vector.
struct ActShape {
  std::size_t channels = 0;
  std::size_t length = 0;

  bool flat() const noexcept { return length == 0; }
  std::size_t size() const noexcept { return flat() ? channels : channels * length; }
  bool operator==(const ActShape&) const = default;
};

enum class Mode { train, eval };

struct BatchNormCache {
  std::vector<double> mean;
  std::vector<double> var;  // biased batch variance
  std::vector<double> inv_std;
  std::vector<double> xhat;
};

/// Everything backward() needs from a forward pass.
struct ForwardCache {
  Mode mode = Mode::eval;
  std::size_t batch = 0;
  std::vector<Tensor> inputs;  // inputs[i] is the input of layer i; back() is the output
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<BatchNormCache> bn;
};

struct GradientPair {
  std::vector<Tensor> param_grads;  // empty when not requested
  Tensor input_grad;
};

/// Sequential network over a fixed layer zoo with reverse-mode gradients.
/// forward/backward are const and safe to call concurrently.
class Network {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Network() = default;
  Network(std::vector<LayerSpec> layers, ActShape input);

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  ActShape input_shape() const noexcept { return input_; }
  /// Output shape of layer i.
  ActShape output_shape(std::size_t i) const { return shapes_.at(i + 1); }
  /// Shape of the logits, i.e. the output of the last non-loss layer.
  ActShape logits_shape() const noexcept { return shapes_[logits_index()]; }
  std::optional<std::size_t> find_layer(std::string_view name) const noexcept;

  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  std::vector<Tensor>& buffers() noexcept { return buffers_; }
  const std::vector<Tensor>& buffers() const noexcept { return buffers_; }
  std::vector<std::string> param_names() const;
  std::vector<std::string> buffer_names() const;
  std::size_t param_count() const noexcept;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases; unit
  /// scale and zero shift for batchnorm.
  void init_params(Rng& rng);

  /// Runs layers [0, stop] (default: every layer before the loss head).
  Tensor forward(const Tensor& batch, Mode mode, ForwardCache* cache = nullptr,
                 std::size_t stop = npos) const;

  /// Reverse pass from d(loss)/d(output of the cached forward).
  GradientPair backward(const ForwardCache& cache, const Tensor& dout, bool param_grads) const;

  /// Applies the batch statistics of a train-mode pass to the running stats.
  void update_running_stats(const ForwardCache& cache);

 private:
  std::size_t logits_index() const noexcept;
  Tensor as_batch(const Tensor& batch) const;

  std::vector<LayerSpec> layers_;
  ActShape input_{};
  std::vector<ActShape> shapes_;                  // shapes_[i] = input of layer i
  std::vector<std::vector<std::size_t>> pslots_;  // parameter indices per layer
  std::vector<std::vector<std::size_t>> bslots_;  // buffer indices per layer
  std::vector<Tensor> params_;
  std::vector<Tensor> buffers_;
};

struct LossOutput {
  double loss = 0.0;
  Tensor dlogits;
};

/// Mean softmax cross-entropy over the batch and its gradient.
LossOutput softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

struct BackwardResult {
  double loss = 0.0;
  Tensor logits;
  GradientPair grads;
};

/// Forward, loss and reverse pass in one call. The input gradient is always
/// populated; parameter gradients only when requested.
BackwardResult loss_and_gradients(const Network& net, const Tensor& batch, std::span<const int> labels,
                                  Mode mode, bool param_grads = true, ForwardCache* keep_cache = nullptr);

double sigmoid(double x) noexcept;
double silu(double x) noexcept;

}  // namespace eqdf

#endif  // EQDF_LAYERS_HPP
