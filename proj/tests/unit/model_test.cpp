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

#include <cstring>

#include "eqdf/error.hpp"
#include "eqdf/model.hpp"
#include "support.hpp"

using namespace eqdf;
using eqdf::testing::random_tensor;

TEST_SUITE("model") {

TEST_CASE("M5 mini shapes") {
  for (auto variant : {M5Variant::standard, M5Variant::tricks}) {
    Classifier m = build_m5_mini(variant, 12, 1200, 1);
    CHECK(m.num_classes() == 12);
    CHECK(m.input_len() == 1200);
    CHECK(m.feature_dim() == kMiniPlan.back());
    Rng rng(2);
    const Tensor x = random_tensor({3, 1200}, rng);
    CHECK(m.logits(x).shape == std::vector<std::size_t>{3, 12});
    CHECK(m.extract(x).shape == std::vector<std::size_t>{3, kMiniPlan.back()});
  }
  CHECK_THROWS_AS(build_m5_mini(M5Variant::standard, 12, m5_min_input_len() - 1, 1), UsageError);
}

TEST_CASE("the tricks variant has no batchnorm and uses SiLU") {
  const Classifier m = build_m5_mini(M5Variant::tricks, 4, 1200, 1);
  bool silu = false;
  for (const auto& l : m.net().layers()) {
    CHECK(l.kind != LayerKind::batchnorm1d);
    silu = silu || l.kind == LayerKind::silu;
  }
  CHECK(silu);
}

TEST_CASE("argmax breaks ties toward the lowest class") {
  const Tensor z({2, 3}, std::vector<double>{1.0, 3.0, 3.0, 0.0, 0.0, 0.0});
  CHECK(argmax_rows(z) == std::vector<int>{1, 0});
}

TEST_CASE("checkpoint round trip gives bit-identical predictions") {
  Classifier m = build_m5_mini(M5Variant::standard, 5, 1200, 9);
  Rng rng(4);
  for (auto& b : m.net().buffers())
    for (double& v : b.data) v = std::uniform_real_distribution<double>(0.5, 1.5)(rng);
  m.metadata()["note"] = "round trip";
  const Tensor x = random_tensor({4, 1200}, rng);
  const auto dir = eqdf::testing::scratch_dir("ckpt");
  save_checkpoint(m, dir / "m.eqdf");
  const Classifier back = load_checkpoint(dir / "m.eqdf");
  const Tensor a = m.logits(x), b = back.logits(x);
  CHECK(std::memcmp(a.data.data(), b.data.data(), a.size() * sizeof(double)) == 0);
  CHECK(back.metadata()["note"] == "round trip");
  CHECK(back.arch_id() == m.arch_id());
  CHECK(encode_checkpoint(back) == encode_checkpoint(m));
}

TEST_CASE("corrupt checkpoints are data errors") {
  const Classifier m = build_m5_mini(M5Variant::tricks, 3, 1200, 1);
  const std::string bytes = encode_checkpoint(m);
  CHECK_THROWS_AS(decode_checkpoint("NOPE" + bytes.substr(4)), DataError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 8)), DataError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), DataError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/m.eqdf"), DataError);
}

TEST_CASE("probe classifier sits on a frozen encoder without input gradients") {
  auto enc = std::make_shared<Classifier>(build_m5_mini(M5Variant::standard, 4, 1200, 2));
  ProbeClassifier probe(enc, 6, 1);
  CHECK(probe.num_classes() == 6);
  CHECK_FALSE(probe.has_input_gradients());
  Rng rng(1);
  CHECK(probe.logits(random_tensor({2, 1200}, rng)).shape == std::vector<std::size_t>{2, 6});
  CHECK_THROWS_AS(probe.input_gradient(random_tensor({1, 1200}, rng), std::vector<int>{0}), UsageError);
}

}  // TEST_SUITE
