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

#include "eqdf/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "eqdf/error.hpp"

namespace eqdf {

BackwardResult Model::input_gradient(const Tensor&, std::span<const int>) const {
  throw UsageError("model does not expose input gradients");
}

Classifier::Classifier(std::string arch_id, Network net, std::string feature_layer, std::size_t sample_rate)
    : arch_id_(std::move(arch_id)), net_(std::move(net)), feature_layer_(std::move(feature_layer)),
      sample_rate_(sample_rate) {
  const auto idx = net_.find_layer(feature_layer_);
  if (!idx) throw UsageError("feature layer '" + feature_layer_ + "' not found in " + arch_id_);
  const ActShape fs = net_.output_shape(*idx);
  if (!fs.flat() || fs.channels == 0) throw UsageError("feature layer '" + feature_layer_ + "' must be flat and non-empty");
  if (!net_.logits_shape().flat()) throw UsageError(arch_id_ + ": logits must be flat");
}

std::size_t Classifier::num_classes() const { return net_.logits_shape().channels; }

std::size_t Classifier::input_len() const {
  const ActShape in = net_.input_shape();
  return in.flat() ? in.channels : in.length;
}

Tensor Classifier::logits(const Tensor& batch) const { return net_.forward(batch, Mode::eval); }

BackwardResult Classifier::input_gradient(const Tensor& batch, std::span<const int> labels) const {
  return loss_and_gradients(net_, batch, labels, Mode::eval, false);
}

std::size_t Classifier::feature_dim() const { return net_.output_shape(*net_.find_layer(feature_layer_)).channels; }

Tensor Classifier::extract(const Tensor& batch) const {
  return net_.forward(batch, Mode::eval, nullptr, *net_.find_layer(feature_layer_));
}

std::size_t m5_min_input_len() {
  std::size_t need = 1;
  for (int i = 0; i < 4; ++i) need *= kM5Pool;
  return (need - 1) * kM5FirstStride + kM5FirstKernel;
}

Classifier build_m5_mini(M5Variant variant, std::size_t num_classes, std::size_t input_len, std::uint64_t seed,
                         ChannelPlan plan, std::size_t sample_rate) {
  if (num_classes < 2) throw UsageError("a classifier needs at least two classes");
  if (input_len < 256) throw UsageError("input_len must be at least 256 samples");
  const std::size_t min_len = m5_min_input_len();
  if (input_len < min_len)
    throw UsageError("input_len " + std::to_string(input_len) + " is too short for the M5 pooling chain; minimum is " +
                     std::to_string(min_len));
  const bool tricks = variant == M5Variant::tricks;
  std::vector<LayerSpec> layers;
  std::size_t in_ch = 1;
  for (std::size_t blk = 0; blk < plan.size(); ++blk) {
    const std::string id = std::to_string(blk + 1);
    if (blk == 0)
      layers.push_back(LayerSpec::conv1d(in_ch, plan[blk], kM5FirstKernel, kM5FirstStride, 0, "conv" + id));
    else
      layers.push_back(LayerSpec::conv1d(in_ch, plan[blk], 3, 1, 1, "conv" + id));
    if (!tricks) layers.push_back(LayerSpec::batchnorm1d(plan[blk], 1e-5, 0.1, "bn" + id));
    layers.push_back(tricks ? LayerSpec::silu("act" + id) : LayerSpec::relu("act" + id));
    layers.push_back(LayerSpec::maxpool1d(kM5Pool, "pool" + id));
    in_ch = plan[blk];
  }
  layers.push_back(LayerSpec::globalavgpool("features"));
  layers.push_back(LayerSpec::linear(in_ch, num_classes, "head"));
  layers.push_back(LayerSpec::softmax_xent("loss"));
  Network net(std::move(layers), ActShape{1, input_len});
  Rng rng(seed);
  net.init_params(rng);
  Classifier model(tricks ? "m5-mini-tricks" : "m5-mini", std::move(net), "features", sample_rate);
  model.metadata()["init_seed"] = seed;
  return model;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw UsageError("logits must be a (batch, classes) tensor");
  const std::size_t B = logits.shape[0], K = logits.shape[1];
  std::vector<int> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    const double* z = logits.data.data() + b * K;
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k)
      if (z[k] > z[best]) best = k;
    out[b] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict(const Model& model, const Tensor& batch) { return argmax_rows(model.logits(batch)); }

Tensor features(const Classifier& model, const Tensor& batch) { return model.extract(batch); }

ProbeClassifier::ProbeClassifier(std::shared_ptr<const FeatureExtractor> encoder, std::size_t num_classes,
                                 std::uint64_t seed)
    : encoder_(std::move(encoder)) {
  if (!encoder_) throw UsageError("probe needs a feature extractor");
  head_ = Network({LayerSpec::linear(encoder_->feature_dim(), num_classes, "head"), LayerSpec::softmax_xent("loss")},
                  ActShape{encoder_->feature_dim(), 0});
  Rng rng(seed);
  head_.init_params(rng);
}

std::size_t ProbeClassifier::num_classes() const { return head_.logits_shape().channels; }

Tensor ProbeClassifier::logits(const Tensor& batch) const {
  return head_.forward(encoder_->extract(batch), Mode::eval);
}

// ---------------------------------------------------------------------------
// Checkpoints

nlohmann::json layer_to_json(const LayerSpec& s) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(s.kind));
  j["name"] = s.name;
  j["in"] = s.in;
  j["out"] = s.out;
  j["kernel"] = s.kernel;
  j["stride"] = s.stride;
  j["padding"] = s.padding;
  j["eps"] = s.eps;
  j["momentum"] = s.momentum;
  return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  LayerSpec s;
  s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  s.name = j.value("name", "");
  s.in = j.value("in", std::size_t{0});
  s.out = j.value("out", std::size_t{0});
  s.kernel = j.value("kernel", std::size_t{0});
  s.stride = j.value("stride", std::size_t{1});
  s.padding = j.value("padding", std::size_t{0});
  s.eps = j.value("eps", 1e-5);
  s.momentum = j.value("momentum", 0.1);
  return s;
}

namespace {

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <class T>
T get_le(std::string_view in, std::size_t offset) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_checkpoint(const Classifier& model) {
  const Network& net = model.net();
  nlohmann::json header;
  header["architecture"] = model.arch_id();
  header["feature_layer"] = model.feature_layer();
  header["sample_rate"] = model.sample_rate();
  header["input_shape"] = {net.input_shape().channels, net.input_shape().length};
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) layers.push_back(layer_to_json(l));
  header["layers"] = layers;
  nlohmann::json tensors = nlohmann::json::array();
  const auto pnames = net.param_names();
  const auto bnames = net.buffer_names();
  for (std::size_t i = 0; i < net.params().size(); ++i)
    tensors.push_back({{"name", pnames[i]}, {"role", "param"}, {"shape", net.params()[i].shape}});
  for (std::size_t i = 0; i < net.buffers().size(); ++i)
    tensors.push_back({{"name", bnames[i]}, {"role", "buffer"}, {"shape", net.buffers()[i].shape}});
  header["tensors"] = tensors;
  header["metadata"] = model.metadata();
  const std::string text = header.dump();

  std::string out = "EQDF";
  put_le<std::uint16_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  auto put_tensor = [&](const Tensor& t) {
    for (double v : t.data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  };
  for (const auto& t : net.params()) put_tensor(t);
  for (const auto& t : net.buffers()) put_tensor(t);
  return out;
}

Classifier decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 10 || bytes.substr(0, 4) != "EQDF") throw DataError("checkpoint: missing EQDF magic");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kCheckpointVersion) throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const auto hlen = get_le<std::uint32_t>(bytes, 6);
  if (bytes.size() < 10 + static_cast<std::size_t>(hlen)) throw DataError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(10, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad JSON header: ") + e.what());
  }
  try {
    std::vector<LayerSpec> layers;
    for (const auto& l : header.at("layers")) layers.push_back(layer_from_json(l));
    const auto shape = header.at("input_shape");
    Network net(std::move(layers), ActShape{shape.at(0).get<std::size_t>(), shape.at(1).get<std::size_t>()});
    std::size_t offset = 10 + hlen;
    auto read_tensor = [&](Tensor& t, const nlohmann::json& decl) {
      if (decl.at("shape").get<std::vector<std::size_t>>() != t.shape)
        throw DataError("checkpoint: tensor '" + decl.at("name").get<std::string>() + "' has unexpected shape");
      if (bytes.size() < offset + 8 * t.size()) throw DataError("checkpoint: truncated tensor data");
      for (double& v : t.data) {
        v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset));
        offset += 8;
      }
    };
    const auto& decls = header.at("tensors");
    if (decls.size() != net.params().size() + net.buffers().size())
      throw DataError("checkpoint: tensor count does not match the layer specs");
    std::size_t d = 0;
    for (auto& t : net.params()) read_tensor(t, decls.at(d++));
    for (auto& t : net.buffers()) read_tensor(t, decls.at(d++));
    if (offset != bytes.size()) throw DataError("checkpoint: trailing bytes after tensor data");
    Classifier model(header.at("architecture").get<std::string>(), std::move(net),
                     header.at("feature_layer").get<std::string>(), header.at("sample_rate").get<std::size_t>());
    model.metadata() = header.value("metadata", nlohmann::json::object());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint: invalid architecture: ") + e.what());
  }
}

void save_checkpoint(const Classifier& model, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Classifier load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace eqdf
