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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "eqdf/attack.hpp"
#include "eqdf/error.hpp"
#include "support.hpp"

using namespace eqdf;
using eqdf::testing::linear_classifier;
using eqdf::testing::random_tensor;

namespace {

double sign(double v) { return (v > 0) - (v < 0); }

// For a two-class linear softmax model the loss gradient in x points along
// w_other - w_true regardless of x, so the L-inf optimum is a corner.
std::vector<double> linear_oracle(const Classifier& m, std::span<const double> x, int label, double eps) {
  const auto& w = m.net().params()[0].data;
  const std::size_t len = x.size();
  const std::size_t t = static_cast<std::size_t>(label), o = 1 - t;
  std::vector<double> out(len);
  for (std::size_t i = 0; i < len; ++i)
    out[i] = std::clamp(x[i] + eps * sign(w[o * len + i] - w[t * len + i]), -1.0, 1.0);
  return out;
}

}  // namespace

TEST_SUITE("attack") {

TEST_CASE("projection lands in the ball and the clamp range") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Tensor x = random_tensor({16}, rng, -1.0, 1.0);
    Tensor adv = random_tensor({16}, rng, -3.0, 3.0);
    const double eps = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    project(adv.span(), x.span(), eps, std::pair{-1.0, 1.0});
    for (std::size_t i = 0; i < 16; ++i) {
      CHECK(std::abs(adv.data[i] - x.data[i]) <= eps + 1e-15);
      CHECK(std::abs(adv.data[i]) <= 1.0);
    }
  }
}

TEST_CASE("PGD reaches the analytic optimum of a linear model") {
  const Classifier m = linear_classifier(12, 2, 3);
  Rng rng(5);
  const Tensor x = random_tensor({6, 12}, rng, -0.5, 0.5);
  const std::vector<int> labels{0, 1, 0, 1, 1, 0};
  for (double eps : {0.01, 0.1, 0.3}) {
    AttackConfig cfg;
    cfg.epsilon = eps;
    cfg.steps = 50;
    const Tensor adv = pgd(m, x, labels, cfg);
    for (std::size_t i = 0; i < 6; ++i) {
      const auto expect = linear_oracle(m, x.row(i), labels[i], eps);
      for (std::size_t j = 0; j < 12; ++j) CHECK(adv.row(i)[j] == doctest::Approx(expect[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("PGD respects the clamp near the range edge") {
  const Classifier m = linear_classifier(8, 2, 1);
  Tensor x({1, 8}, 0.98);
  AttackConfig cfg;
  cfg.epsilon = 0.1;
  const Tensor adv = pgd(m, x, std::vector<int>{0}, cfg);
  for (double v : adv.data) {
    CHECK(v <= 1.0);
    CHECK(v >= 0.88 - 1e-15);
  }
  cfg.clamp.reset();
  const Tensor free = pgd(m, x, std::vector<int>{0}, cfg);
  double hi = -INFINITY;
  for (double v : free.data) hi = std::max(hi, v);
  CHECK(hi == doctest::Approx(1.08));
}

TEST_CASE("rows are attacked independently of the batch") {
  const Classifier m = build_m5_mini(M5Variant::standard, 4, 1200, 2);
  Rng rng(3);
  const Tensor x = random_tensor({3, 1200}, rng, -0.5, 0.5);
  const std::vector<int> labels{0, 2, 3};
  AttackConfig cfg;
  cfg.epsilon = 0.05;
  cfg.steps = 3;
  const Tensor all = pgd(m, x, labels, cfg);
  const Tensor threaded = pgd(m, x, labels, cfg, 3);
  CHECK(std::memcmp(all.data.data(), threaded.data.data(), all.size() * sizeof(double)) == 0);
  for (std::size_t i = 0; i < 3; ++i) {
    Tensor one({1, 1200}, std::vector<double>(x.row(i).begin(), x.row(i).end()));
    const Tensor single = pgd(m, one, std::vector<int>{labels[i]}, cfg);
    CHECK(std::memcmp(single.data.data(), all.row(i).data(), 1200 * sizeof(double)) == 0);
  }
}

TEST_CASE("random start stays in the ball and is reproducible") {
  const Classifier m = linear_classifier(10, 2, 4);
  Rng rng(8);
  const Tensor x = random_tensor({2, 10}, rng, -0.5, 0.5);
  AttackConfig cfg;
  cfg.epsilon = 0.2;
  cfg.steps = 1;
  cfg.random_start = true;
  cfg.seed = 17;
  const Tensor a = pgd(m, x, std::vector<int>{0, 1}, cfg), b = pgd(m, x, std::vector<int>{0, 1}, cfg);
  CHECK(a.data == b.data);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data[i] - x.data[i]) <= 0.2 + 1e-15);
}

TEST_CASE("attack errors") {
  const Classifier m = linear_classifier(4, 2, 1);
  AttackConfig cfg;
  cfg.epsilon = 0.1;
  Tensor bad({1, 4}, 0.0);
  bad.data[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pgd(m, bad, std::vector<int>{0}, cfg), NumericError);
  CHECK_THROWS_AS(pgd(m, Tensor({1, 4}, 1.5), std::vector<int>{0}, cfg), DataError);
  auto enc = std::make_shared<Classifier>(build_m5_mini(M5Variant::standard, 2, 1200, 1));
  ProbeClassifier probe(enc, 2, 1);
  CHECK_THROWS_AS(pgd(probe, Tensor({1, 1200}), std::vector<int>{0}, cfg), UsageError);
  AttackConfig neg;
  neg.epsilon = -0.1;
  CHECK_THROWS_AS(validate(neg), UsageError);
  AttackConfig nosteps;
  nosteps.steps = 0;
  CHECK_THROWS_AS(validate(nosteps), UsageError);
}

TEST_CASE("sweep scores clean inputs at zero budget and stays in every ball") {
  const Classifier m = linear_classifier(16, 2, 6);
  const SubgroupedDataset ds = eqdf::testing::toy_dataset(30, 16, 2, 9);
  const auto idx = ds.all_indices();
  const std::vector<double> eps{0.0, 0.01, 0.1, 0.3};
  AttackConfig tmpl;
  tmpl.steps = 20;
  const CorrectnessGrid g = attack_sweep(m, ds, idx, eps, tmpl);
  const auto clean = predict(m, ds.batch(idx));
  for (std::size_t s = 0; s < idx.size(); ++s) CHECK(g.correct[0][s] == (clean[s] == ds[idx[s]].label));
  for (std::size_t e = 0; e < eps.size(); ++e) CHECK(g.max_linf[e] <= eps[e] + 1e-9);
  for (std::size_t e = 1; e < eps.size(); ++e) CHECK(g.accuracy(e) <= g.accuracy(e - 1));
  const CorrectnessGrid t = attack_sweep(m, ds, idx, eps, tmpl, 4);
  CHECK(t.correct == g.correct);
  CHECK(t.max_linf == g.max_linf);
  CHECK(g.ids.front() == "s0");
  CHECK_THROWS_AS(attack_sweep(m, ds, idx, std::vector<double>{0.1, 0.01}, tmpl), UsageError);
  const SubgroupedDataset three = eqdf::testing::toy_dataset(6, 16, 3, 1);
  CHECK_THROWS_AS(attack_sweep(m, three, three.all_indices(), eps, tmpl), DataError);
}

}  // TEST_SUITE
