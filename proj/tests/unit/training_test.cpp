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

#include <doctest.h>

#include <cmath>

#include "eqdf/error.hpp"
#include "eqdf/synth.hpp"
#include "eqdf/training.hpp"
#include "support.hpp"

using namespace eqdf;

namespace {

SubgroupedDataset small_synth(std::size_t classes = 4) {
  SynthSpec s = default_synth_spec();
  s.num_classes = classes;
  s.train_size = 48;
  s.validation_size = 24;
  s.test_size = 12;
  return synth_generate(s);
}

TrainConfig quick(int epochs = 2) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("noise augmentation with zero sigma is the identity and draws nothing") {
  Rng a(5), b(5);
  const Tensor x = eqdf::testing::random_tensor({2, 10}, a);
  Rng fresh(9), ref(9);
  const Tensor y = noise_augment(x, 0.0, fresh);
  CHECK(y.data == x.data);
  CHECK(fresh() == ref());
}

TEST_CASE("noise augmentation has the requested spread") {
  Rng rng(1);
  const Tensor x({1, 200000}, 0.0);
  const Tensor y = noise_augment(x, 0.3, rng);
  double mean = 0.0, sq = 0.0;
  for (double v : y.data) mean += v;
  mean /= static_cast<double>(y.size());
  for (double v : y.data) sq += (v - mean) * (v - mean);
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::sqrt(sq / static_cast<double>(y.size())) == doctest::Approx(0.3).epsilon(0.01));
}

TEST_CASE("model selection prefers the earliest best epoch") {
  CHECK(select_model(std::vector<double>{0.5, 0.3, 0.3, 0.4}) == 1);
  CHECK(select_model(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.2}) == 0);
  CHECK(select_model(std::vector<double>{0.5, 0.9}, std::vector<double>{0.5, 0.2}) == 1);
  TrainHistory h;
  h.epochs.resize(3);
  h.epochs[0].val_loss = 1.0;
  h.epochs[1].val_loss = 0.5;
  h.epochs[2].val_loss = 0.7;
  CHECK(select_model(h, SelectionCriterion::min_val_loss) == 1);
}

TEST_CASE("lambda one trains exactly like the clean objective") {
  const SubgroupedDataset ds = small_synth();
  TrainConfig plain = quick();
  plain.selection = SelectionCriterion::min_val_loss;
  TrainConfig adv = plain;
  adv.adv = AdvTrainConfig{0.1, 2, std::nullopt, 1.0};
  Classifier a = build_m5_mini(M5Variant::standard, 4, 1200, 1);
  Classifier b = build_m5_mini(M5Variant::standard, 4, 1200, 1);
  const TrainHistory ha = train(a, ds, plain);
  const TrainHistory hb = train(b, ds, adv);
  for (std::size_t p = 0; p < a.net().params().size(); ++p) CHECK(a.net().params()[p].data == b.net().params()[p].data);
  for (std::size_t p = 0; p < a.net().buffers().size(); ++p)
    CHECK(a.net().buffers()[p].data == b.net().buffers()[p].data);
  for (std::size_t e = 0; e < ha.epochs.size(); ++e) CHECK(ha.epochs[e].val_loss == hb.epochs[e].val_loss);
  CHECK(hb.epochs.back().val_attacked_acc.has_value());
}

TEST_CASE("training is deterministic and records a history") {
  const SubgroupedDataset ds = small_synth();
  TrainConfig cfg = quick(3);
  cfg.noise_sigma = 0.1;
  Classifier a = build_m5_mini(M5Variant::tricks, 4, 1200, 1);
  Classifier b = build_m5_mini(M5Variant::tricks, 4, 1200, 1);
  std::vector<int> seen;
  const TrainHistory h = train(a, ds, cfg, [&](const EpochRecord& r) { seen.push_back(r.epoch); });
  train(b, ds, cfg);
  CHECK(encode_checkpoint(a) == encode_checkpoint(b));
  CHECK(seen == std::vector<int>{0, 1, 2});
  CHECK(h.epochs.size() == 3);
  CHECK(a.metadata()["selected_epoch"] == h.selected);
  const std::string csv = history_csv(h);
  CHECK(csv.rfind("epoch,lr,loss,val_acc,val_attacked_acc\n", 0) == 0);
}

TEST_CASE("a standard model separates clean synthetic classes") {
  SynthSpec s = default_synth_spec();
  s.skew = 0.0;
  s.shift = 0.0;
  const SubgroupedDataset ds = synth_generate(s);
  Classifier m = build_m5_mini(M5Variant::standard, s.num_classes, s.length, 0);
  const TrainHistory h = train(m, ds, TrainConfig{});
  CHECK(h.epochs[h.selected].val_acc >= 0.95);
}

TEST_CASE("invalid training settings") {
  TrainConfig c;
  c.epochs = 0;
  CHECK_THROWS_AS(validate(c), UsageError);
  c = TrainConfig{};
  c.adv = AdvTrainConfig{0.1, 10, std::nullopt, 1.5};
  CHECK_THROWS_AS(validate(c), UsageError);
  c = TrainConfig{};
  c.noise_sigma = -1;
  CHECK_THROWS_AS(validate(c), UsageError);
}

TEST_CASE("zoo names parse into interventions") {
  auto e = parse_zoo_name("M5");
  CHECK(e.iv == Intervention{});
  e = parse_zoo_name("M5-NA3");
  CHECK(e.iv.noise_sigma == doctest::Approx(0.3));
  CHECK_FALSE(e.iv.tricks);
  e = parse_zoo_name("M5-T-AT.1-NA1");
  CHECK(e.iv.tricks);
  CHECK(e.iv.at_epsilon == doctest::Approx(0.1));
  CHECK(e.iv.noise_sigma == doctest::Approx(0.1));
  e = parse_zoo_name("M5-T-AT.01NA1");
  CHECK(e.iv.at_epsilon == doctest::Approx(0.01));
  CHECK(binary_encoding(e.iv) == std::vector<double>{1, 1, 1, 0});
  CHECK_THROWS_AS(parse_zoo_name("ResNet"), UsageError);
  CHECK_THROWS_AS(parse_zoo_name("M5-AT"), UsageError);
  CHECK_THROWS_AS(parse_zoo({}), UsageError);
  CHECK_THROWS_AS(parse_zoo({"M5", "M5"}), UsageError);
  CHECK_THROWS_AS(parse_zoo({"M5", "M5-NA0"}), UsageError);
  CHECK(parse_zoo(kDefaultZoo).size() == 8);
}

TEST_CASE("zoo rows get their own seeds and settings") {
  TrainConfig base = quick();
  base.seed = 10;
  base.adv = AdvTrainConfig{0.5, 7, std::nullopt, 0.25};
  const auto entries = parse_zoo({"M5", "M5-T-AT.1-NA3"});
  const TrainConfig plain = entry_config(entries[0], base, 0);
  const TrainConfig adv = entry_config(entries[1], base, 1);
  CHECK(plain.seed == 10);
  CHECK(adv.seed == 11);
  CHECK_FALSE(plain.adv.has_value());
  REQUIRE(adv.adv.has_value());
  CHECK(adv.adv->epsilon == doctest::Approx(0.1));
  CHECK(adv.adv->steps == 7);
  CHECK(adv.adv->lambda == 0.25);
  CHECK(adv.noise_sigma == doctest::Approx(0.3));
}

TEST_CASE("parallel zoo builds match serial ones") {
  const SubgroupedDataset ds = small_synth();
  const auto entries = parse_zoo({"M5", "M5-T", "M5-NA1"});
  const auto serial = build_zoo(ds, entries, quick(), 1);
  const auto par = build_zoo(ds, entries, quick(), 3);
  REQUIRE(serial.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(serial[i].model.has_value());
    REQUIRE(par[i].model.has_value());
    CHECK(encode_checkpoint(*serial[i].model) == encode_checkpoint(*par[i].model));
  }
}

TEST_CASE("a diverging zoo row is recorded without stopping the others") {
  const SubgroupedDataset ds = small_synth();
  TrainConfig cfg = quick(1);
  cfg.initial_lr = 1e308;
  const auto results = build_zoo(ds, parse_zoo({"M5", "M5-T"}), cfg, 1);
  REQUIRE(results.size() == 2);
  for (const auto& r : results) {
    CHECK_FALSE(r.model.has_value());
    CHECK(r.error.find("non-finite") != std::string::npos);
  }
}

}  // TEST_SUITE
