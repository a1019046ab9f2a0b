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

#include "eqdf/attack.hpp"

#include <algorithm>
#include <cmath>

#include "eqdf/error.hpp"
#include "eqdf/parallel.hpp"
#include "eqdf/rng.hpp"

namespace eqdf {

void validate(const AttackConfig& cfg) {
  if (!(cfg.epsilon >= 0)) throw UsageError("attack epsilon must be >= 0");
  if (cfg.steps < 1) throw UsageError("attack steps must be >= 1");
  if (cfg.epsilon > 0 && !(cfg.effective_step() > 0)) throw UsageError("attack step size must be > 0");
  if (cfg.clamp && !(cfg.clamp->first < cfg.clamp->second)) throw UsageError("attack clamp range is empty");
}

void project(std::span<double> x_adv, std::span<const double> x, double epsilon,
             const std::optional<std::pair<double, double>>& clamp) noexcept {
  for (std::size_t i = 0; i < x_adv.size(); ++i) {
    double v = std::clamp(x_adv[i], x[i] - epsilon, x[i] + epsilon);
    if (clamp) v = std::clamp(v, clamp->first, clamp->second);
    x_adv[i] = v;
  }
}

namespace {

constexpr std::size_t kShard = 16;

void check_input(const Model& model, const Tensor& x, std::span<const int> labels, const AttackConfig& cfg) {
  validate(cfg);
  if (!model.has_input_gradients()) throw UsageError("PGD needs a model with input gradients");
  if (x.rank() == 0 || x.shape[0] != labels.size())
    throw UsageError("PGD: " + std::to_string(labels.size()) + " labels for batch " + shape_string(x.shape));
  if (!x.all_finite()) throw NumericError("PGD: input contains non-finite values");
  if (cfg.clamp)
    for (double v : x.data)
      if (v < cfg.clamp->first || v > cfg.clamp->second) throw DataError("PGD: input lies outside the clamp range");
}

std::vector<double> attack_row(const Model& model, std::span<const double> x, std::vector<std::size_t> shape, int label,
                               const AttackConfig& cfg, std::uint64_t row_key) {
  std::vector<double> adv(x.begin(), x.end());
  if (cfg.epsilon == 0) return adv;
  if (cfg.random_start) {
    Rng rng = stream_rng(cfg.seed, row_key);
    std::uniform_real_distribution<double> u(-cfg.epsilon, cfg.epsilon);
    for (double& v : adv) v += u(rng);
    project(adv, x, cfg.epsilon, cfg.clamp);
  }
  shape[0] = 1;
  const double step = cfg.effective_step();
  const int y[1] = {label};
  for (int s = 0; s < cfg.steps; ++s) {
    const BackwardResult r = model.input_gradient(Tensor(shape, adv), y);
    const auto& g = r.grads.input_grad.data;
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] += step * static_cast<double>((g[i] > 0) - (g[i] < 0));
    project(adv, x, cfg.epsilon, cfg.clamp);
  }
  return adv;
}

}  // namespace

Tensor pgd(const Model& model, const Tensor& x, std::span<const int> labels, const AttackConfig& cfg,
           unsigned threads) {
  check_input(model, x, labels, cfg);
  Tensor out = x;
  parallel_for(labels.size(), threads, [&](std::size_t r) {
    const auto adv = attack_row(model, x.row(r), x.shape, labels[r], cfg, r);
    std::copy(adv.begin(), adv.end(), out.row(r).begin());
  });
  return out;
}

double CorrectnessGrid::accuracy(std::size_t e) const {
  const auto& c = correct.at(e);
  if (c.empty()) return 0.0;
  return static_cast<double>(std::count(c.begin(), c.end(), std::uint8_t{1})) / static_cast<double>(c.size());
}

CorrectnessGrid attack_sweep(const Model& model, const SubgroupedDataset& ds, std::span<const std::size_t> idx,
                             std::span<const double> epsilons, const AttackConfig& tmpl, unsigned threads) {
  if (idx.empty()) throw DataError("attack sweep needs at least one sample");
  if (epsilons.empty()) throw UsageError("attack sweep needs at least one epsilon");
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    if (epsilons[e] < 0) throw UsageError("attack sweep epsilons must be >= 0");
    if (e > 0 && !(epsilons[e] > epsilons[e - 1])) throw UsageError("attack sweep epsilons must be strictly increasing");
  }
  if (model.num_classes() != ds.num_classes())
    throw DataError("model has " + std::to_string(model.num_classes()) + " classes but the dataset has " +
                    std::to_string(ds.num_classes()));
  for (double eps : epsilons) {
    AttackConfig c = tmpl;
    c.epsilon = eps;
    validate(c);
  }

  CorrectnessGrid grid;
  grid.epsilons.assign(epsilons.begin(), epsilons.end());
  grid.samples.assign(idx.begin(), idx.end());
  for (std::size_t i : idx) {
    grid.ids.push_back(ds[i].id);
    grid.groups.push_back(ds[i].groups);
  }
  const std::size_t n = idx.size();
  const std::size_t shards = (n + kShard - 1) / kShard;
  grid.correct.assign(epsilons.size(), std::vector<std::uint8_t>(n, 0));
  std::vector<std::vector<double>> shard_linf(epsilons.size(), std::vector<double>(shards, 0.0));

  parallel_for(epsilons.size() * shards, threads, [&](std::size_t job) {
    const std::size_t e = job / shards, sh = job % shards;
    const std::size_t lo = sh * kShard, hi = std::min(n, lo + kShard);
    const std::vector<std::size_t> rows(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                        idx.begin() + static_cast<std::ptrdiff_t>(hi));
    Tensor x = ds.batch(rows);
    const std::vector<int> y = ds.labels(rows);
    Tensor input = x;
    if (epsilons[e] > 0) {
      AttackConfig c = tmpl;
      c.epsilon = epsilons[e];
      check_input(model, x, y, c);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto adv = attack_row(model, x.row(r), x.shape, y[r], c, rows[r]);
        std::copy(adv.begin(), adv.end(), input.row(r).begin());
      }
      double linf = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) linf = std::max(linf, std::abs(input.data[i] - x.data[i]));
      shard_linf[e][sh] = linf;
    }
    const auto pred = predict(model, input);
    for (std::size_t r = 0; r < rows.size(); ++r) grid.correct[e][lo + r] = pred[r] == y[r] ? 1 : 0;
  });
  for (const auto& v : shard_linf) grid.max_linf.push_back(*std::max_element(v.begin(), v.end()));
  return grid;
}

}  // namespace eqdf
