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

#include "eqdf/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>
#include <set>

#include "eqdf/attack.hpp"
#include "eqdf/csv.hpp"
#include "eqdf/error.hpp"
#include "eqdf/optim.hpp"
#include "eqdf/parallel.hpp"

namespace eqdf {

std::string_view to_string(SelectionCriterion c) noexcept {
  return c == SelectionCriterion::min_val_loss ? "min_val_loss" : "joint_clean_attacked";
}

SelectionCriterion TrainConfig::effective_selection() const noexcept {
  if (selection) return *selection;
  return adv ? SelectionCriterion::joint_clean_attacked : SelectionCriterion::min_val_loss;
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw UsageError("training needs at least one epoch");
  if (!(cfg.initial_lr > 0)) throw UsageError("initial learning rate must be positive");
  if (!(cfg.lr_decay > 0 && cfg.lr_decay <= 1)) throw UsageError("lr decay must lie in (0, 1]");
  if (cfg.decay_period < 1) throw UsageError("lr decay period must be >= 1");
  if (!(cfg.noise_sigma >= 0)) throw UsageError("noise sigma must be >= 0");
  if (cfg.batch_size == 0) throw UsageError("batch size must be positive");
  if (cfg.adv) {
    if (!(cfg.adv->lambda >= 0 && cfg.adv->lambda <= 1)) throw UsageError("joint-loss lambda must lie in [0, 1]");
    AttackConfig a;
    a.epsilon = cfg.adv->epsilon;
    a.steps = cfg.adv->steps;
    a.step_size = cfg.adv->step_size;
    validate(a);
    if (cfg.val_attack_steps < 1) throw UsageError("validation attack steps must be >= 1");
  }
}

nlohmann::json to_json(const TrainConfig& cfg) {
  nlohmann::json j = {{"epochs", cfg.epochs},
                      {"initial_lr", cfg.initial_lr},
                      {"lr_decay", cfg.lr_decay},
                      {"decay_period", cfg.decay_period},
                      {"noise_sigma", cfg.noise_sigma},
                      {"seed", cfg.seed},
                      {"batch_size", cfg.batch_size},
                      {"selection", std::string(to_string(cfg.effective_selection()))}};
  if (cfg.adv) {
    j["adv"] = {{"epsilon", cfg.adv->epsilon},
                {"steps", cfg.adv->steps},
                {"step_size", cfg.adv->step_size.value_or(cfg.adv->epsilon / 5.0)},
                {"lambda", cfg.adv->lambda},
                {"val_attack_steps", cfg.val_attack_steps}};
  } else {
    j["adv"] = nullptr;
  }
  return j;
}

std::string history_csv(const TrainHistory& h) {
  CsvWriter w({"epoch", "lr", "loss", "val_acc", "val_attacked_acc"});
  for (const auto& e : h.epochs)
    w.row({std::to_string(e.epoch), format_double(e.lr), format_double(e.val_loss), format_double(e.val_acc),
           e.val_attacked_acc ? format_double(*e.val_attacked_acc) : std::string()});
  return w.text();
}

Tensor noise_augment(const Tensor& batch, double sigma, Rng& rng) {
  if (!(sigma >= 0)) throw UsageError("noise sigma must be >= 0");
  if (sigma == 0) return batch;
  Tensor out = batch;
  std::normal_distribution<double> n(0.0, sigma);
  for (double& v : out.data) v += n(rng);
  return out;
}

std::size_t select_model(std::span<const double> val_losses) {
  if (val_losses.empty()) throw UsageError("model selection needs a non-empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_losses.size(); ++i)
    if (val_losses[i] < val_losses[best]) best = i;
  return best;
}

std::size_t select_model(std::span<const double> clean_acc, std::span<const double> attacked_acc) {
  if (clean_acc.empty() || clean_acc.size() != attacked_acc.size())
    throw UsageError("model selection needs matching, non-empty accuracy histories");
  std::size_t best = 0;
  double best_score = 0.5 * (clean_acc[0] + attacked_acc[0]);
  for (std::size_t i = 1; i < clean_acc.size(); ++i) {
    const double s = 0.5 * (clean_acc[i] + attacked_acc[i]);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

std::size_t select_model(const TrainHistory& history, SelectionCriterion criterion) {
  std::vector<double> a, b;
  for (const auto& e : history.epochs) {
    if (criterion == SelectionCriterion::min_val_loss) {
      a.push_back(e.val_loss);
    } else {
      if (!e.val_attacked_acc) throw UsageError("joint selection needs attacked validation accuracy");
      a.push_back(e.val_acc);
      b.push_back(*e.val_attacked_acc);
    }
  }
  return criterion == SelectionCriterion::min_val_loss ? select_model(a) : select_model(a, b);
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566;

Tensor clip_unit(Tensor t) {
  for (double& v : t.data) v = std::clamp(v, -1.0, 1.0);
  return t;
}

void check_finite(double loss, int epoch) {
  if (!std::isfinite(loss)) throw NumericError("training diverged: non-finite loss in epoch " + std::to_string(epoch));
}

/// Joint objective for one batch; returns the combined loss and gradients.
std::pair<double, std::vector<Tensor>> batch_gradients(Network& net, const Tensor& x, const std::vector<int>& y,
                                                       const TrainConfig& cfg) {
  ForwardCache cache;
  BackwardResult clean = loss_and_gradients(net, x, y, Mode::train, true, &cache);
  if (!cfg.adv) {
    net.update_running_stats(cache);
    return {clean.loss, std::move(clean.grads.param_grads)};
  }
  const AdvTrainConfig& a = *cfg.adv;
  const double step = a.step_size.value_or(a.epsilon / 5.0);
  Tensor adv = x;
  for (int s = 0; s < a.steps && a.epsilon > 0; ++s) {
    const BackwardResult r = loss_and_gradients(net, adv, y, Mode::train, false);
    const auto& g = r.grads.input_grad.data;
    for (std::size_t i = 0; i < adv.size(); ++i) adv.data[i] += step * static_cast<double>((g[i] > 0) - (g[i] < 0));
    project(adv.data, x.data, a.epsilon, std::pair{-1.0, 1.0});
  }
  BackwardResult attacked = loss_and_gradients(net, adv, y, Mode::train, true);
  net.update_running_stats(cache);
  auto grads = std::move(clean.grads.param_grads);
  for (std::size_t p = 0; p < grads.size(); ++p) {
    auto& g = grads[p].data;
    const auto& ga = attacked.grads.param_grads[p].data;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = a.lambda * g[i] + (1.0 - a.lambda) * ga[i];
  }
  return {a.lambda * clean.loss + (1.0 - a.lambda) * attacked.loss, std::move(grads)};
}

void require_splits(const SubgroupedDataset& ds, const std::vector<std::size_t>& tr,
                    const std::vector<std::size_t>& va) {
  if (tr.empty()) throw DataError("training split is empty");
  if (va.empty()) throw DataError("validation split is empty");
  (void)ds;
}

bool better(const EpochRecord& r, const EpochRecord& best, SelectionCriterion c) {
  if (c == SelectionCriterion::min_val_loss) return r.val_loss < best.val_loss;
  return 0.5 * (r.val_acc + *r.val_attacked_acc) > 0.5 * (best.val_acc + *best.val_attacked_acc);
}

}  // namespace

TrainHistory train(Classifier& model, const SubgroupedDataset& ds, const TrainConfig& cfg,
                   const EpochCallback& on_epoch) {
  validate(cfg);
  if (model.num_classes() != ds.num_classes()) throw DataError("model and dataset disagree on the class count");
  if (model.input_len() != ds.length()) throw DataError("model and dataset disagree on the input length");
  std::vector<std::size_t> order = ds.indices(Split::train);
  const std::vector<std::size_t> val = ds.indices(Split::validation);
  require_splits(ds, order, val);

  const Tensor val_x = ds.batch(val);
  const std::vector<int> val_y = ds.labels(val);
  std::optional<AttackConfig> val_attack;
  if (cfg.adv) {
    val_attack.emplace();
    val_attack->epsilon = cfg.adv->epsilon;
    val_attack->steps = cfg.val_attack_steps;
    val_attack->step_size = cfg.adv->step_size;
  }

  Network& net = model.net();
  Adam opt;
  Rng rng = stream_rng(cfg.seed, kShuffleStream);
  TrainHistory hist;
  hist.criterion = cfg.effective_selection();
  std::vector<Tensor> best_params = net.params(), best_buffers = net.buffers();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg.initial_lr, cfg.lr_decay, cfg.decay_period);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                          order.begin() + static_cast<std::ptrdiff_t>(hi));
      Tensor x = ds.batch(rows);
      if (cfg.noise_sigma > 0) x = clip_unit(noise_augment(x, cfg.noise_sigma, rng));
      const std::vector<int> y = ds.labels(rows);
      auto [loss, grads] = batch_gradients(net, x, y, cfg);
      check_finite(loss, epoch);
      opt.step(net.params(), grads, lr);
      loss_sum += loss * static_cast<double>(rows.size());
      seen += rows.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    const Tensor logits = net.forward(val_x, Mode::eval);
    rec.val_loss = softmax_cross_entropy(logits, val_y).loss;
    check_finite(rec.val_loss, epoch);
    const auto pred = argmax_rows(logits);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == val_y[i];
    rec.val_acc = static_cast<double>(hits) / static_cast<double>(pred.size());
    if (val_attack) {
      const auto adv_pred = predict(model, pgd(model, val_x, val_y, *val_attack));
      std::size_t adv_hits = 0;
      for (std::size_t i = 0; i < adv_pred.size(); ++i) adv_hits += adv_pred[i] == val_y[i];
      rec.val_attacked_acc = static_cast<double>(adv_hits) / static_cast<double>(adv_pred.size());
    }
    if (hist.criterion == SelectionCriterion::joint_clean_attacked && !rec.val_attacked_acc)
      throw UsageError("joint selection requires adversarial training settings");
    if (hist.epochs.empty() || better(rec, hist.epochs[hist.selected], hist.criterion)) {
      hist.selected = hist.epochs.size();
      best_params = net.params();
      best_buffers = net.buffers();
    }
    hist.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  net.params() = std::move(best_params);
  net.buffers() = std::move(best_buffers);
  model.metadata()["training"] = to_json(cfg);
  model.metadata()["selected_epoch"] = hist.selected;
  return hist;
}

TrainHistory train_probe(ProbeClassifier& model, const SubgroupedDataset& ds, const TrainConfig& cfg) {
  validate(cfg);
  if (cfg.adv) throw UsageError("probe training does not support adversarial training (no input gradients)");
  std::vector<std::size_t> order = ds.indices(Split::train);
  const std::vector<std::size_t> val = ds.indices(Split::validation);
  require_splits(ds, order, val);
  const FeatureExtractor& enc = model.encoder();
  const Tensor val_f = enc.extract(ds.batch(val));
  const std::vector<int> val_y = ds.labels(val);
  Network& head = model.head();
  Adam opt;
  Rng rng = stream_rng(cfg.seed, kShuffleStream);
  TrainHistory hist;
  hist.criterion = SelectionCriterion::min_val_loss;
  std::vector<Tensor> best = head.params();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg.initial_lr, cfg.lr_decay, cfg.decay_period);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                          order.begin() + static_cast<std::ptrdiff_t>(hi));
      Tensor x = ds.batch(rows);
      if (cfg.noise_sigma > 0) x = clip_unit(noise_augment(x, cfg.noise_sigma, rng));
      const BackwardResult r = loss_and_gradients(head, enc.extract(x), ds.labels(rows), Mode::train, true);
      check_finite(r.loss, epoch);
      opt.step(head.params(), r.grads.param_grads, lr);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    const Tensor logits = head.forward(val_f, Mode::eval);
    rec.val_loss = softmax_cross_entropy(logits, val_y).loss;
    check_finite(rec.val_loss, epoch);
    const auto pred = argmax_rows(logits);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == val_y[i];
    rec.val_acc = static_cast<double>(hits) / static_cast<double>(pred.size());
    if (hist.epochs.empty() || rec.val_loss < hist.epochs[hist.selected].val_loss) {
      hist.selected = hist.epochs.size();
      best = head.params();
    }
    hist.epochs.push_back(rec);
  }
  head.params() = std::move(best);
  return hist;
}

std::vector<double> binary_encoding(const Intervention& iv) {
  return {iv.na() ? 1.0 : 0.0, iv.at() ? 1.0 : 0.0, iv.tricks ? 1.0 : 0.0, iv.pretrained ? 1.0 : 0.0};
}

ZooEntry parse_zoo_name(std::string_view name) {
  static const std::regex re(R"(^M5(-T)?(-AT(\.\d+))?(-?NA(\d))?$)");
  const std::string s(name);
  std::smatch m;
  if (!std::regex_match(s, m, re))
    throw UsageError("cannot parse zoo entry '" + s + "' (expected e.g. M5, M5-NA3, M5-T-AT.1-NA1)");
  ZooEntry e;
  e.name = s;
  e.iv.tricks = m[1].matched;
  if (m[2].matched) e.iv.at_epsilon = std::stod("0" + m[3].str());
  if (m[4].matched) e.iv.noise_sigma = std::stoi(m[5].str()) / 10.0;
  if (m[2].matched && e.iv.at_epsilon <= 0) throw UsageError("zoo entry '" + s + "' has a zero attack budget");
  if (m[4].matched && e.iv.noise_sigma <= 0) throw UsageError("zoo entry '" + s + "' has zero noise (drop NA0)");
  return e;
}

std::vector<ZooEntry> parse_zoo(const std::vector<std::string>& names) {
  if (names.empty()) throw UsageError("zoo specification is empty");
  std::vector<ZooEntry> out;
  std::set<std::string> seen;
  for (const auto& n : names) {
    ZooEntry e = parse_zoo_name(n);
    if (!seen.insert(n).second) throw UsageError("duplicate zoo entry '" + n + "'");
    for (const auto& prev : out)
      if (prev.iv == e.iv)
        throw UsageError("zoo entries '" + prev.name + "' and '" + n + "' describe the same interventions");
    out.push_back(std::move(e));
  }
  return out;
}

TrainConfig entry_config(const ZooEntry& entry, const TrainConfig& base, std::size_t index) {
  TrainConfig cfg = base;
  cfg.seed = base.seed + index;
  cfg.noise_sigma = entry.iv.noise_sigma;
  if (entry.iv.at()) {
    AdvTrainConfig a = base.adv.value_or(AdvTrainConfig{});
    a.epsilon = entry.iv.at_epsilon;
    a.step_size.reset();
    cfg.adv = a;
  } else {
    cfg.adv.reset();
  }
  return cfg;
}

std::vector<ZooResult> build_zoo(const SubgroupedDataset& ds, const std::vector<ZooEntry>& entries,
                                 const TrainConfig& base, unsigned threads,
                                 const std::function<void(const ZooResult&)>& on_done) {
  if (entries.empty()) throw UsageError("zoo specification is empty");
  std::vector<std::string> names;
  for (const auto& e : entries) names.push_back(e.name);
  parse_zoo(names);  // duplicate check
  std::vector<ZooResult> out(entries.size());
  parallel_for(entries.size(), threads, [&](std::size_t i) {
    ZooResult& r = out[i];
    r.entry = entries[i];
    const TrainConfig cfg = entry_config(entries[i], base, i);
    Classifier model = build_m5_mini(entries[i].iv.tricks ? M5Variant::tricks : M5Variant::standard,
                                     ds.num_classes(), ds.length(), cfg.seed, kMiniPlan, ds.sample_rate());
    try {
      r.history = train(model, ds, cfg);
    } catch (const NumericError& e) {
      r.error = e.what();
      if (on_done) on_done(r);
      return;
    }
    model.metadata()["zoo_name"] = entries[i].name;
    model.metadata()["intervention"] = {{"tricks", entries[i].iv.tricks},
                                        {"noise_sigma", entries[i].iv.noise_sigma},
                                        {"at_epsilon", entries[i].iv.at_epsilon},
                                        {"pretrained", entries[i].iv.pretrained}};
    r.model = std::move(model);
    if (on_done) on_done(r);
  });
  return out;
}

}  // namespace eqdf
