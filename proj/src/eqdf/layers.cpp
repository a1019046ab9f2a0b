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

#include "eqdf/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <cblas.h>

#include "eqdf/error.hpp"

namespace eqdf {

namespace {

inline double dot(const double* a, const double* b, std::size_t n) noexcept {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline void axpy(double alpha, const double* __restrict x, double* __restrict y, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Lout x (Cin*K) patch matrix of one sample; out-of-range taps are zero.
void im2col(const double* x, std::size_t cin, std::size_t lin, const LayerSpec& spec, std::size_t lout,
            double* cols) noexcept {
  const std::size_t K = spec.kernel, ck = cin * K;
  for (std::size_t t = 0; t < lout; ++t) {
    const std::ptrdiff_t s0 = static_cast<std::ptrdiff_t>(t * spec.stride) - static_cast<std::ptrdiff_t>(spec.padding);
    double* row = cols + t * ck;
    for (std::size_t c = 0; c < cin; ++c) {
      const double* xr = x + c * lin;
      for (std::size_t k = 0; k < K; ++k) {
        const std::ptrdiff_t pos = s0 + static_cast<std::ptrdiff_t>(k);
        row[c * K + k] = (pos >= 0 && pos < static_cast<std::ptrdiff_t>(lin)) ? xr[pos] : 0.0;
      }
    }
  }
}

void col2im_add(const double* cols, std::size_t cin, std::size_t lin, const LayerSpec& spec, std::size_t lout,
                double* dx) noexcept {
  const std::size_t K = spec.kernel, ck = cin * K;
  for (std::size_t t = 0; t < lout; ++t) {
    const std::ptrdiff_t s0 = static_cast<std::ptrdiff_t>(t * spec.stride) - static_cast<std::ptrdiff_t>(spec.padding);
    const double* row = cols + t * ck;
    for (std::size_t c = 0; c < cin; ++c) {
      double* dr = dx + c * lin;
      for (std::size_t k = 0; k < K; ++k) {
        const std::ptrdiff_t pos = s0 + static_cast<std::ptrdiff_t>(k);
        if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(lin)) dr[pos] += row[c * K + k];
      }
    }
  }
}

// Serial BLAS keeps per-sample results independent of the host core count.
void ensure_serial_blas() {
  static const bool once = [] {
    openblas_set_num_threads(1);
    return true;
  }();
  (void)once;
}

std::string describe(const LayerSpec& spec, std::size_t index) {
  std::string out = "layer " + std::to_string(index) + " (" + std::string(to_string(spec.kind));
  if (!spec.name.empty()) out += " '" + spec.name + "'";
  return out + ")";
}

std::string act_string(ActShape s) {
  return s.flat() ? "(" + std::to_string(s.channels) + ")"
                  : "(" + std::to_string(s.channels) + ", " + std::to_string(s.length) + ")";
}

std::vector<std::size_t> batch_shape(std::size_t batch, ActShape s) {
  if (s.flat()) return {batch, s.channels};
  return {batch, s.channels, s.length};
}

// Channel/length view of a flat or sequence activation.
std::size_t seq_len(ActShape s) noexcept { return s.flat() ? 1 : s.length; }

}  // namespace

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double silu(double x) noexcept { return x * sigmoid(x); }

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::linear: return "linear";
    case LayerKind::relu: return "relu";
    case LayerKind::silu: return "silu";
    case LayerKind::batchnorm1d: return "batchnorm1d";
    case LayerKind::maxpool1d: return "maxpool1d";
    case LayerKind::globalavgpool: return "globalavgpool";
    case LayerKind::softmax_xent: return "softmax_xent";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto k : {LayerKind::conv1d, LayerKind::linear, LayerKind::relu, LayerKind::silu, LayerKind::batchnorm1d,
                 LayerKind::maxpool1d, LayerKind::globalavgpool, LayerKind::softmax_xent}) {
    if (to_string(k) == name) return k;
  }
  throw DataError("unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
                            std::size_t padding, std::string name) {
  LayerSpec s;
  s.kind = LayerKind::conv1d;
  s.in = in_ch;
  s.out = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  s.name = std::move(name);
  return s;
}

LayerSpec LayerSpec::linear(std::size_t in_features, std::size_t out_features, std::string name) {
  LayerSpec s;
  s.kind = LayerKind::linear;
  s.in = in_features;
  s.out = out_features;
  s.name = std::move(name);
  return s;
}

LayerSpec LayerSpec::relu(std::string name) {
  LayerSpec s;
  s.kind = LayerKind::relu;
  s.name = std::move(name);
  return s;
}

LayerSpec LayerSpec::silu(std::string name) {
  LayerSpec s;
  s.kind = LayerKind::silu;
  s.name = std::move(name);
  return s;
}

LayerSpec LayerSpec::batchnorm1d(std::size_t channels, double eps, double momentum, std::string name) {
  LayerSpec s;
  s.kind = LayerKind::batchnorm1d;
  s.in = s.out = channels;
  s.eps = eps;
  s.momentum = momentum;
  s.name = std::move(name);
  return s;
}

LayerSpec LayerSpec::maxpool1d(std::size_t width, std::string name) {
  LayerSpec s;
  s.kind = LayerKind::maxpool1d;
  s.kernel = width;
  s.stride = width;
  s.name = std::move(name);
  return s;
}

LayerSpec LayerSpec::globalavgpool(std::string name) {
  LayerSpec s;
  s.kind = LayerKind::globalavgpool;
  s.name = std::move(name);
  return s;
}

LayerSpec LayerSpec::softmax_xent(std::string name) {
  LayerSpec s;
  s.kind = LayerKind::softmax_xent;
  s.name = std::move(name);
  return s;
}

Network::Network(std::vector<LayerSpec> layers, ActShape input) : layers_(std::move(layers)), input_(input) {
  if (input_.channels == 0) throw UsageError("network input must have at least one channel");
  shapes_.push_back(input_);
  pslots_.resize(layers_.size());
  bslots_.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& spec = layers_[i];
    const ActShape in = shapes_.back();
    ActShape out = in;
    auto fail = [&](const std::string& why) {
      throw UsageError(describe(spec, i) + ": " + why + " (input shape " + act_string(in) + ")");
    };
    auto add_param = [&](std::vector<std::size_t> shape) {
      pslots_[i].push_back(params_.size());
      params_.emplace_back(std::move(shape));
    };
    switch (spec.kind) {
      case LayerKind::conv1d: {
        if (in.flat()) fail("conv1d needs a sequence input");
        if (spec.in != in.channels) fail("expects " + std::to_string(spec.in) + " input channels");
        if (spec.kernel == 0 || spec.stride == 0 || spec.out == 0) fail("kernel, stride and channels must be positive");
        if (in.length + 2 * spec.padding < spec.kernel) fail("input shorter than kernel");
        out = {spec.out, (in.length + 2 * spec.padding - spec.kernel) / spec.stride + 1};
        add_param({spec.out, spec.in, spec.kernel});
        add_param({spec.out});
        break;
      }
      case LayerKind::linear: {
        if (!in.flat()) fail("linear needs a flat input");
        if (spec.in != in.channels) fail("expects " + std::to_string(spec.in) + " input features");
        if (spec.out == 0) fail("needs at least one output");
        out = {spec.out, 0};
        add_param({spec.out, spec.in});
        add_param({spec.out});
        break;
      }
      case LayerKind::relu:
      case LayerKind::silu:
        break;
      case LayerKind::batchnorm1d: {
        if (spec.in != in.channels) fail("expects " + std::to_string(spec.in) + " channels");
        if (!(spec.eps > 0.0)) fail("epsilon must be positive");
        if (!(spec.momentum >= 0.0 && spec.momentum <= 1.0)) fail("momentum must lie in [0, 1]");
        add_param({spec.in});
        add_param({spec.in});
        bslots_[i] = {buffers_.size(), buffers_.size() + 1};
        buffers_.emplace_back(std::vector<std::size_t>{spec.in}, 0.0);
        buffers_.emplace_back(std::vector<std::size_t>{spec.in}, 1.0);
        break;
      }
      case LayerKind::maxpool1d: {
        if (in.flat()) fail("maxpool1d needs a sequence input");
        if (spec.kernel == 0) fail("pool width must be positive");
        if (in.length / spec.kernel == 0) fail("input shorter than pool width " + std::to_string(spec.kernel));
        out = {in.channels, in.length / spec.kernel};
        break;
      }
      case LayerKind::globalavgpool: {
        if (in.flat()) fail("globalavgpool needs a sequence input");
        out = {in.channels, 0};
        break;
      }
      case LayerKind::softmax_xent: {
        if (i + 1 != layers_.size()) fail("softmax_xent must be the last layer");
        if (!in.flat()) fail("softmax_xent needs flat logits");
        break;
      }
    }
    shapes_.push_back(out);
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].kind == LayerKind::batchnorm1d) {
      params_[pslots_[i][0]].fill(1.0);
    }
  }
}

std::size_t Network::logits_index() const noexcept {
  if (!layers_.empty() && layers_.back().kind == LayerKind::softmax_xent) return layers_.size() - 1;
  return layers_.size();
}

std::optional<std::size_t> Network::find_layer(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::string> Network::param_names() const {
  std::vector<std::string> names(params_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string base = layers_[i].name.empty() ? "layer" + std::to_string(i) : layers_[i].name;
    const bool bn = layers_[i].kind == LayerKind::batchnorm1d;
    for (std::size_t j = 0; j < pslots_[i].size(); ++j)
      names[pslots_[i][j]] = base + (j == 0 ? (bn ? ".gamma" : ".weight") : (bn ? ".beta" : ".bias"));
  }
  return names;
}

std::vector<std::string> Network::buffer_names() const {
  std::vector<std::string> names(buffers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string base = layers_[i].name.empty() ? "layer" + std::to_string(i) : layers_[i].name;
    for (std::size_t j = 0; j < bslots_[i].size(); ++j)
      names[bslots_[i][j]] = base + (j == 0 ? ".running_mean" : ".running_var");
  }
  return names;
}

std::size_t Network::param_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

void Network::init_params(Rng& rng) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& spec = layers_[i];
    if (spec.kind == LayerKind::conv1d || spec.kind == LayerKind::linear) {
      const std::size_t fan_in = spec.kind == LayerKind::conv1d ? spec.in * spec.kernel : spec.in;
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (std::size_t slot : pslots_[i])
        for (double& v : params_[slot].data) v = dist(rng);
    } else if (spec.kind == LayerKind::batchnorm1d) {
      params_[pslots_[i][0]].fill(1.0);
      params_[pslots_[i][1]].fill(0.0);
      buffers_[bslots_[i][0]].fill(0.0);
      buffers_[bslots_[i][1]].fill(1.0);
    }
  }
}

Tensor Network::as_batch(const Tensor& batch) const {
  const std::size_t b = batch.rank() ? batch.shape[0] : 0;
  if (b == 0) throw UsageError("batch must contain at least one sample");
  bool ok = false;
  if (input_.flat()) {
    ok = batch.rank() == 2 && batch.shape[1] == input_.channels;
  } else if (batch.rank() == 2) {
    ok = input_.channels == 1 && batch.shape[1] == input_.length;
  } else if (batch.rank() == 3) {
    ok = batch.shape[1] == input_.channels && batch.shape[2] == input_.length;
  }
  if (!ok) {
    const std::string first = layers_.empty() ? "network" : describe(layers_.front(), 0);
    throw UsageError("batch shape " + shape_string(batch.shape) + " does not match input " + act_string(input_) +
                     " expected by " + first);
  }
  Tensor out;
  out.shape = batch_shape(b, input_);
  out.data = batch.data;
  return out;
}

Tensor Network::forward(const Tensor& batch, Mode mode, ForwardCache* cache, std::size_t stop) const {
  ensure_serial_blas();
  Tensor x = as_batch(batch);
  const std::size_t B = x.shape[0];
  const std::size_t last = std::min(stop == npos ? logits_index() : stop + 1, logits_index());
  if (cache) {
    cache->mode = mode;
    cache->batch = B;
    cache->inputs.clear();
    cache->argmax.assign(last, {});
    cache->bn.assign(last, {});
  }
  for (std::size_t i = 0; i < last; ++i) {
    const LayerSpec& spec = layers_[i];
    const ActShape in = shapes_[i];
    const ActShape out = shapes_[i + 1];
    Tensor y(batch_shape(B, out));
    switch (spec.kind) {
      case LayerKind::conv1d: {
        const Tensor& w = params_[pslots_[i][0]];
        const Tensor& bias = params_[pslots_[i][1]];
        const std::size_t Cin = spec.in, Cout = spec.out, Lin = in.length, Lout = out.length;
        const std::size_t ck = Cin * spec.kernel;
        std::vector<double> cols(Lout * ck);
        for (std::size_t b = 0; b < B; ++b) {
          im2col(x.data.data() + b * Cin * Lin, Cin, Lin, spec, Lout, cols.data());
          double* yb = y.data.data() + b * Cout * Lout;
          cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(Cout), static_cast<int>(Lout),
                      static_cast<int>(ck), 1.0, w.data.data(), static_cast<int>(ck), cols.data(),
                      static_cast<int>(ck), 0.0, yb, static_cast<int>(Lout));
          for (std::size_t o = 0; o < Cout; ++o)
            for (std::size_t t = 0; t < Lout; ++t) yb[o * Lout + t] += bias.data[o];
        }
        break;
      }
      case LayerKind::linear: {
        const Tensor& w = params_[pslots_[i][0]];
        const Tensor& bias = params_[pslots_[i][1]];
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t o = 0; o < spec.out; ++o)
            y.data[b * spec.out + o] =
                bias.data[o] + dot(w.data.data() + o * spec.in, x.data.data() + b * spec.in, spec.in);
        break;
      }
      case LayerKind::relu:
        for (std::size_t j = 0; j < x.size(); ++j) y.data[j] = x.data[j] > 0.0 ? x.data[j] : 0.0;
        break;
      case LayerKind::silu:
        for (std::size_t j = 0; j < x.size(); ++j) y.data[j] = silu(x.data[j]);
        break;
      case LayerKind::batchnorm1d: {
        const std::size_t C = in.channels, L = seq_len(in);
        const Tensor& gamma = params_[pslots_[i][0]];
        const Tensor& beta = params_[pslots_[i][1]];
        BatchNormCache stats;
        stats.mean.assign(C, 0.0);
        stats.var.assign(C, 0.0);
        stats.inv_std.assign(C, 0.0);
        if (mode == Mode::train) {
          const double n = static_cast<double>(B * L);
          for (std::size_t c = 0; c < C; ++c) {
            double sum = 0.0;
            for (std::size_t b = 0; b < B; ++b)
              for (std::size_t l = 0; l < L; ++l) sum += x.data[(b * C + c) * L + l];
            const double mean = sum / n;
            double sq = 0.0;
            for (std::size_t b = 0; b < B; ++b)
              for (std::size_t l = 0; l < L; ++l) {
                const double d = x.data[(b * C + c) * L + l] - mean;
                sq += d * d;
              }
            stats.mean[c] = mean;
            stats.var[c] = sq / n;
          }
        } else {
          stats.mean = buffers_[bslots_[i][0]].data;
          stats.var = buffers_[bslots_[i][1]].data;
        }
        for (std::size_t c = 0; c < C; ++c) stats.inv_std[c] = 1.0 / std::sqrt(stats.var[c] + spec.eps);
        if (!cache) {
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
              const double scale = gamma.data[c] * stats.inv_std[c];
              const double shift = beta.data[c] - stats.mean[c] * scale;
              const double* xr = x.data.data() + (b * C + c) * L;
              double* yr = y.data.data() + (b * C + c) * L;
              for (std::size_t l = 0; l < L; ++l) yr[l] = xr[l] * scale + shift;
            }
          break;
        }
        stats.xhat.resize(x.size());
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t l = 0; l < L; ++l) {
              const std::size_t j = (b * C + c) * L + l;
              stats.xhat[j] = (x.data[j] - stats.mean[c]) * stats.inv_std[c];
              y.data[j] = gamma.data[c] * stats.xhat[j] + beta.data[c];
            }
        if (cache) cache->bn[i] = std::move(stats);
        break;
      }
      case LayerKind::maxpool1d: {
        const std::size_t W = spec.kernel, Lin = in.length, Lout = out.length;
        std::vector<std::uint32_t> arg(cache ? y.size() : 0);
        for (std::size_t r = 0; r < B * in.channels; ++r) {
          const double* xr = x.data.data() + r * Lin;
          for (std::size_t t = 0; t < Lout; ++t) {
            std::size_t best = t * W;
            for (std::size_t k = t * W + 1; k < (t + 1) * W; ++k)
              if (xr[k] > xr[best]) best = k;
            y.data[r * Lout + t] = xr[best];
            if (cache) arg[r * Lout + t] = static_cast<std::uint32_t>(best);
          }
        }
        if (cache) cache->argmax[i] = std::move(arg);
        break;
      }
      case LayerKind::globalavgpool: {
        const std::size_t L = in.length;
        for (std::size_t r = 0; r < B * in.channels; ++r) {
          double sum = 0.0;
          for (std::size_t l = 0; l < L; ++l) sum += x.data[r * L + l];
          y.data[r] = sum / static_cast<double>(L);
        }
        break;
      }
      case LayerKind::softmax_xent:
        break;
    }
    if (!y.all_finite()) throw NumericError("non-finite activation produced by " + describe(spec, i));
    if (cache) cache->inputs.push_back(std::move(x));
    x = std::move(y);
  }
  if (cache) cache->inputs.push_back(x);
  return x;
}

GradientPair Network::backward(const ForwardCache& cache, const Tensor& dout, bool param_grads) const {
  if (cache.inputs.empty()) throw UsageError("backward called without a forward cache");
  const std::size_t applied = cache.inputs.size() - 1;
  const std::size_t B = cache.batch;
  if (dout.size() != cache.inputs.back().size())
    throw UsageError("output gradient shape " + shape_string(dout.shape) + " does not match forward output " +
                     shape_string(cache.inputs.back().shape));
  GradientPair result;
  if (param_grads) {
    result.param_grads.reserve(params_.size());
    for (const auto& p : params_) result.param_grads.emplace_back(p.shape);
  }
  Tensor g = dout;
  g.shape = cache.inputs.back().shape;
  for (std::size_t ii = applied; ii-- > 0;) {
    const LayerSpec& spec = layers_[ii];
    const ActShape in = shapes_[ii];
    const ActShape out = shapes_[ii + 1];
    const Tensor& x = cache.inputs[ii];
    Tensor dx(x.shape);
    switch (spec.kind) {
      case LayerKind::conv1d: {
        const Tensor& w = params_[pslots_[ii][0]];
        double* dw = param_grads ? result.param_grads[pslots_[ii][0]].data.data() : nullptr;
        double* db = param_grads ? result.param_grads[pslots_[ii][1]].data.data() : nullptr;
        const std::size_t Cin = spec.in, Cout = spec.out, Lin = in.length, Lout = out.length;
        const int ck = static_cast<int>(Cin * spec.kernel);
        std::vector<double> cols(Lout * Cin * spec.kernel);
        std::vector<double> dcols(cols.size());
        for (std::size_t b = 0; b < B; ++b) {
          const double* gb = g.data.data() + b * Cout * Lout;
          if (db)
            for (std::size_t o = 0; o < Cout; ++o) {
              double s = 0.0;
              for (std::size_t t = 0; t < Lout; ++t) s += gb[o * Lout + t];
              db[o] += s;
            }
          if (dw) {
            im2col(x.data.data() + b * Cin * Lin, Cin, Lin, spec, Lout, cols.data());
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(Cout), ck, static_cast<int>(Lout),
                        1.0, gb, static_cast<int>(Lout), cols.data(), ck, 1.0, dw, ck);
          }
          cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(Lout), ck, static_cast<int>(Cout), 1.0,
                      gb, static_cast<int>(Lout), w.data.data(), ck, 0.0, dcols.data(), ck);
          col2im_add(dcols.data(), Cin, Lin, spec, Lout, dx.data.data() + b * Cin * Lin);
        }
        break;
      }
      case LayerKind::linear: {
        const Tensor& w = params_[pslots_[ii][0]];
        double* dw = param_grads ? result.param_grads[pslots_[ii][0]].data.data() : nullptr;
        double* db = param_grads ? result.param_grads[pslots_[ii][1]].data.data() : nullptr;
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t o = 0; o < spec.out; ++o) {
            const double gv = g.data[b * spec.out + o];
            if (db) db[o] += gv;
            axpy(gv, w.data.data() + o * spec.in, dx.data.data() + b * spec.in, spec.in);
            if (dw) axpy(gv, x.data.data() + b * spec.in, dw + o * spec.in, spec.in);
          }
        }
        break;
      }
      case LayerKind::relu:
        for (std::size_t j = 0; j < x.size(); ++j) dx.data[j] = x.data[j] > 0.0 ? g.data[j] : 0.0;
        break;
      case LayerKind::silu:
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double s = sigmoid(x.data[j]);
          dx.data[j] = g.data[j] * s * (1.0 + x.data[j] * (1.0 - s));
        }
        break;
      case LayerKind::batchnorm1d: {
        const std::size_t C = in.channels, L = seq_len(in);
        const BatchNormCache& st = cache.bn[ii];
        const Tensor& gamma = params_[pslots_[ii][0]];
        double* dgamma = param_grads ? result.param_grads[pslots_[ii][0]].data.data() : nullptr;
        double* dbeta = param_grads ? result.param_grads[pslots_[ii][1]].data.data() : nullptr;
        const double n = static_cast<double>(B * L);
        for (std::size_t c = 0; c < C; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t l = 0; l < L; ++l) {
              const std::size_t j = (b * C + c) * L + l;
              sum_g += g.data[j];
              sum_gx += g.data[j] * st.xhat[j];
            }
          if (dgamma) dgamma[c] += sum_gx;
          if (dbeta) dbeta[c] += sum_g;
          const double scale = gamma.data[c] * st.inv_std[c];
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t l = 0; l < L; ++l) {
              const std::size_t j = (b * C + c) * L + l;
              if (cache.mode == Mode::train)
                dx.data[j] = scale / n * (n * g.data[j] - sum_g - st.xhat[j] * sum_gx);
              else
                dx.data[j] = scale * g.data[j];
            }
        }
        break;
      }
      case LayerKind::maxpool1d: {
        const std::size_t Lin = in.length, Lout = out.length;
        const auto& arg = cache.argmax[ii];
        for (std::size_t r = 0; r < B * in.channels; ++r)
          for (std::size_t t = 0; t < Lout; ++t) dx.data[r * Lin + arg[r * Lout + t]] += g.data[r * Lout + t];
        break;
      }
      case LayerKind::globalavgpool: {
        const std::size_t L = in.length;
        const double inv = 1.0 / static_cast<double>(L);
        for (std::size_t r = 0; r < B * in.channels; ++r)
          for (std::size_t l = 0; l < L; ++l) dx.data[r * L + l] = g.data[r] * inv;
        break;
      }
      case LayerKind::softmax_xent:
        break;
    }
    g = std::move(dx);
  }
  result.input_grad = std::move(g);
  return result;
}

void Network::update_running_stats(const ForwardCache& cache) {
  if (cache.mode != Mode::train) return;
  for (std::size_t i = 0; i < cache.bn.size(); ++i) {
    if (layers_[i].kind != LayerKind::batchnorm1d) continue;
    const BatchNormCache& st = cache.bn[i];
    const double n = static_cast<double>(cache.batch * seq_len(shapes_[i]));
    const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
    const double m = layers_[i].momentum;
    auto& rm = buffers_[bslots_[i][0]].data;
    auto& rv = buffers_[bslots_[i][1]].data;
    for (std::size_t c = 0; c < rm.size(); ++c) {
      rm[c] = (1.0 - m) * rm[c] + m * st.mean[c];
      rv[c] = (1.0 - m) * rv[c] + m * st.var[c] * unbias;
    }
  }
}

LossOutput softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw UsageError("logits must be a (batch, classes) tensor");
  const std::size_t B = logits.shape[0], K = logits.shape[1];
  if (labels.size() != B)
    throw UsageError("got " + std::to_string(labels.size()) + " labels for a batch of " + std::to_string(B));
  LossOutput out;
  out.dlogits = Tensor(logits.shape);
  double total = 0.0;
  const double invB = 1.0 / static_cast<double>(B);
  for (std::size_t b = 0; b < B; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= K)
      throw UsageError("label " + std::to_string(y) + " outside [0, " + std::to_string(K) + ")");
    const double* z = logits.data.data() + b * K;
    const double m = *std::max_element(z, z + K);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(z[k] - m);
    total += (m - z[y]) + std::log(sum);
    double* d = out.dlogits.data.data() + b * K;
    for (std::size_t k = 0; k < K; ++k) d[k] = std::exp(z[k] - m) / sum * invB;
    d[y] -= invB;
  }
  out.loss = total / static_cast<double>(B);
  return out;
}

BackwardResult loss_and_gradients(const Network& net, const Tensor& batch, std::span<const int> labels, Mode mode,
                                  bool param_grads, ForwardCache* keep_cache) {
  ForwardCache local;
  ForwardCache& cache = keep_cache ? *keep_cache : local;
  BackwardResult r;
  r.logits = net.forward(batch, mode, &cache);
  LossOutput loss = softmax_cross_entropy(r.logits, labels);
  r.loss = loss.loss;
  r.grads = net.backward(cache, loss.dlogits, param_grads);
  r.grads.input_grad.shape = batch.shape;
  return r;
}

}  // namespace eqdf
