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
#include <random>

#include "eqdf/error.hpp"
#include "eqdf/metrics.hpp"
#include "eqdf/rng.hpp"
#include "oracles.hpp"

using namespace eqdf;
using eqdf::testing::direct_pearson;
using eqdf::testing::riemann;

TEST_SUITE("metrics") {

TEST_CASE("trapezoid AUC matches a fine Riemann sum on piecewise-linear curves") {
  Rng rng(12);
  constexpr std::size_t kCells = 100000;
  for (int t = 0; t < 20; ++t) {
    const double lo = std::uniform_real_distribution<double>(-1, 1)(rng);
    const double span = std::uniform_real_distribution<double>(0.1, 5)(rng);
    std::vector<std::size_t> knots{0, kCells};
    for (int k = 0; k < 8; ++k) knots.push_back(std::uniform_int_distribution<std::size_t>(1, kCells - 1)(rng));
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    std::vector<double> x, y;
    for (auto k : knots) {
      x.push_back(lo + span * static_cast<double>(k) / kCells);
      y.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
    }
    x.back() = lo + span;
    CHECK(std::abs(trapezoid_auc(x, y) - riemann(x, y, kCells)) < 1e-12);
    CHECK(trapezoid_auc(x, y, false) == doctest::Approx(trapezoid_auc(x, y) * (x.back() - x.front())));
  }
}

TEST_CASE("trapezoid AUC of simple shapes") {
  CHECK(trapezoid_auc(std::vector<double>{0, 1}, std::vector<double>{1, 1}) == 1.0);
  CHECK(trapezoid_auc(std::vector<double>{0, 0.5, 2}, std::vector<double>{1, 1, 0}, false) == 1.25);
  CHECK_THROWS_AS(trapezoid_auc(std::vector<double>{0, 0}, std::vector<double>{1, 1}), UsageError);
  CHECK_THROWS_AS(trapezoid_auc(std::vector<double>{0}, std::vector<double>{1}), UsageError);
}

TEST_CASE("pearson matches the direct formula") {
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(3, 60)(rng);
    std::vector<double> x(n), y(n);
    std::normal_distribution<double> g;
    const double slope = g(rng);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g(rng);
      y[i] = slope * x[i] + g(rng);
    }
    const auto r = pearson(x, y);
    REQUIRE(r.has_value());
    CHECK(std::abs(*r - direct_pearson(x, y)) < 1e-12);
  }
}

TEST_CASE("pearson is undefined for constant or short input") {
  CHECK_FALSE(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}).has_value());
  CHECK_FALSE(pearson(std::vector<double>{1}, std::vector<double>{2}).has_value());
  CHECK_FALSE(pearson(std::vector<double>{1, 2}, std::vector<double>{2}).has_value());
  CHECK(*pearson(std::vector<double>{0, 1, 0, 1}, std::vector<double>{1, 3, 1, 3}) == doctest::Approx(1.0));
}

TEST_CASE("parity is the largest pairwise gap") {
  CHECK(max_gap({{"a", 0.3}, {"b", 0.7}, {"c", 0.5}}) == doctest::Approx(0.4));
  CHECK(defense_parity({{"a", 0.3}}) == 0.0);
  CHECK(fpr_parity({{"a", 0.1}, {"b", 0.1}}) == 0.0);
  CHECK_THROWS_AS(accuracy_parity({}), UsageError);
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    std::map<std::string, double> v;
    for (int g = 0; g < 5; ++g) v["g" + std::to_string(g)] = std::uniform_real_distribution<double>()(rng);
    double worst = 0.0;
    for (const auto& [a, x] : v)
      for (const auto& [b, y] : v) worst = std::max(worst, std::abs(x - y));
    CHECK(max_gap(v) == worst);
  }
}

TEST_CASE("curves partition samples and keep declared absent groups") {
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const std::vector<std::array<std::string, 3>> groups{
      {"f", "young", "us"}, {"m", "young", "us"}, {"f", "old", "in"}, {"f", "young", "in"}};
  const std::vector<std::vector<std::uint8_t>> hits{{1, 1, 0, 1}, {1, 0, 0, 1}, {0, 0, 0, 1}};
  const SubgroupCurve c = curve_from_indicators(Axis::gender, grid, hits, groups, {"f", "m", "x"});
  std::size_t total = 0;
  for (const auto& [g, s] : c.groups) total += s.n;
  CHECK(total == groups.size());
  CHECK(c.at("f").n == 3);
  CHECK(c.at("f").values == std::vector<double>{2.0 / 3, 2.0 / 3, 1.0 / 3});
  CHECK(c.at("m").values == std::vector<double>{1, 0, 0});
  CHECK_FALSE(c.groups.at("x").present());
  CHECK(std::isnan(c.groups.at("x").values[0]));
  CHECK_THROWS_AS(c.at("x"), DataError);
  CHECK_THROWS_AS(c.at("nope"), DataError);
  CHECK(auc_acc(c, "m") == doctest::Approx(0.25));
}

TEST_CASE("intervention correlation skips undefined rows and flags constant columns") {
  const std::vector<std::string> names{"NA", "T"};
  const std::vector<std::vector<double>> enc{{0, 1}, {1, 1}, {0, 1}, {1, 1}};
  const std::map<std::string, std::vector<double>> targets{{"DP:gender", {0.1, 0.3, 0.1, NAN}}};
  const auto cells = intervention_correlation(names, enc, targets, EncodingMode::binary);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].intervention == "NA");
  REQUIRE(cells[0].r.has_value());
  CHECK(*cells[0].r == doctest::Approx(1.0));
  CHECK_FALSE(cells[1].r.has_value());
  CHECK_THROWS_AS(intervention_correlation(names, {{0, 1}}, targets, EncodingMode::binary), UsageError);
}

}  // TEST_SUITE
