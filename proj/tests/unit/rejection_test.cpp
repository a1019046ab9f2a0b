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
#include <numeric>

#include "eqdf/error.hpp"
#include "eqdf/metrics.hpp"
#include "eqdf/rejection.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace eqdf;

namespace {

// Feature blobs around class-specific centres on a circle.
Tensor blobs(std::size_t per_class, std::size_t classes, Rng& rng, std::vector<int>& labels) {
  std::normal_distribution<double> g(0.0, 0.3);
  Tensor f({per_class * classes, 2});
  labels.clear();
  for (std::size_t i = 0; i < per_class * classes; ++i) {
    const std::size_t c = i % classes;
    const double ang = 2 * M_PI * static_cast<double>(c) / static_cast<double>(classes);
    f.data[2 * i] = 2 * std::cos(ang) + g(rng);
    f.data[2 * i + 1] = 2 * std::sin(ang) + g(rng);
    labels.push_back(static_cast<int>(c));
  }
  return f;
}

// Never abstains: the statistic always clears any threshold.
class AlwaysAnswer final : public Rejector {
 public:
  AbstainWhen abstain_when() const noexcept override { return AbstainWhen::stat_below_alpha; }
  std::vector<RejectionProfile> profiles(const SubgroupedDataset& ds, std::span<const std::size_t> idx,
                                         unsigned) const override {
    std::vector<RejectionProfile> out;
    for (auto i : idx) out.push_back({ds[i].label, 2.0});
    return out;
  }
};

}  // namespace

TEST_SUITE("rejection") {

TEST_CASE("binomial test matches exhaustive enumeration") {
  for (std::uint64_t n = 1; n <= 16; ++n) {
    const auto expect = eqdf::testing::enumerated_two_sided_p(n);
    for (std::uint64_t k = 0; k <= n; ++k) CHECK(std::abs(binomial_two_sided_p(k, n) - expect[k]) <= 1e-12);
  }
  CHECK(binomial_two_sided_p(10, 10) == 0.001953125);
  CHECK(binomial_two_sided_p(7, 10) == 0.34375);
  CHECK(binomial_two_sided_p(3, 10) == 0.34375);
}

TEST_CASE("large-n binomial agrees with a long-double tail sum") {
  for (std::uint64_t n : {63ULL, 100ULL, 1000ULL, 10000ULL}) {
    for (std::uint64_t k : {n / 2 + 1, n / 2 + n / 10, n - n / 20, n}) {
      long double tail = 0.0L;
      for (std::uint64_t i = std::max(k, n - k); i <= n; ++i)
        tail += std::exp(std::lgamma(static_cast<long double>(n) + 1) - std::lgamma(static_cast<long double>(i) + 1) -
                         std::lgamma(static_cast<long double>(n - i) + 1) - static_cast<long double>(n) * std::log(2.0L));
      const double expect = static_cast<double>(std::min(1.0L, 2 * tail));
      const double got = binomial_two_sided_p(k, n);
      if (expect > 1e-300) CHECK(got == doctest::Approx(expect).epsilon(1e-9));
      CHECK(got == binomial_two_sided_p(n - k, n));
    }
  }
  CHECK_THROWS_AS(binomial_two_sided_p(3, 2), UsageError);
  CHECK_THROWS_AS(binomial_two_sided_p(0, 0), UsageError);
}

TEST_CASE("vote profiles use the top two counts") {
  auto p = profile_from_counts(std::vector<std::uint32_t>{3, 7, 0});
  CHECK(p.cls == 1);
  CHECK(p.stat == binomial_two_sided_p(7, 10));
  p = profile_from_counts(std::vector<std::uint32_t>{5, 5, 1});
  CHECK(p.cls == 0);
  CHECK(p.stat == 1.0);
  p = profile_from_counts(std::vector<std::uint32_t>{0, 9});
  CHECK(p.stat == binomial_two_sided_p(9, 9));
}

TEST_CASE("alpha grid has 1000 exact points") {
  const auto g = alpha_grid();
  REQUIRE(g.size() == 1000);
  CHECK(g.front() == 0.001);
  CHECK(g.back() == 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == static_cast<double>(i + 1) / 1000.0);
}

TEST_CASE("abstention is monotone in the threshold") {
  Rng rng(3);
  std::vector<RejectionProfile> prof;
  for (int i = 0; i < 200; ++i) prof.push_back({i % 3, std::uniform_real_distribution<double>(0, 1)(rng)});
  prof.push_back({0, 0.5});
  prof.push_back({0, 1.0});
  const auto grid = alpha_grid();
  const auto below = abstentions(prof, grid, AbstainWhen::stat_below_alpha);
  const auto above = abstentions(prof, grid, AbstainWhen::stat_above_alpha);
  for (std::size_t a = 1; a < grid.size(); ++a)
    for (std::size_t s = 0; s < prof.size(); ++s) {
      CHECK(below[a][s] >= below[a - 1][s]);
      CHECK(above[a][s] <= above[a - 1][s]);
    }
}

TEST_CASE("neural rejection fits separable blobs") {
  Rng rng(5);
  std::vector<int> fy, cy;
  const Tensor fit = blobs(20, 3, rng, fy), cal = blobs(10, 3, rng, cy);
  const NeuralRejector nr = fit_neural_rejection(fit, fy, cal, cy, 3);
  CHECK(nr.num_classes() == 3);
  CHECK(nr.gamma() > 0);
  for (const auto& s : nr.solutions()) CHECK(s.converged);
  std::vector<int> ty;
  const Tensor test = blobs(10, 3, rng, ty);
  const auto prof = nr.profiles(test);
  int right = 0;
  for (std::size_t i = 0; i < ty.size(); ++i) {
    const auto p = nr.probabilities(test.row(i));
    for (double v : p) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(prof[i].cls == nr.profile(test.row(i)).cls);
    CHECK(prof[i].stat == *std::max_element(p.begin(), p.end()));
    right += prof[i].cls == ty[i];
    CHECK(nr.predict(test.row(i), 0.0) == prof[i].cls);
    CHECK(nr.predict(test.row(i), 1.0) == (prof[i].stat < 1.0 ? kAbstain : prof[i].cls));
  }
  CHECK(right >= 28);
  // A point far from every blob has low confidence.
  const std::vector<double> far{30.0, -30.0};
  CHECK(nr.profile(far).stat < 0.5);
}

TEST_CASE("neural rejection input errors") {
  Rng rng(1);
  std::vector<int> fy, cy;
  const Tensor fit = blobs(5, 2, rng, fy), cal = blobs(5, 2, rng, cy);
  CHECK_THROWS_AS(fit_neural_rejection(fit, fy, cal, cy, 3), DataError);
  NeuralRejectionOptions bad;
  bad.gamma = -1.0;
  CHECK_THROWS_AS(fit_neural_rejection(fit, fy, cal, cy, 2, bad), UsageError);
  const NeuralRejector nr = fit_neural_rejection(fit, fy, cal, cy, 2);
  const auto ds = eqdf::testing::toy_dataset(4, 8, 2, 1);
  CHECK_THROWS_AS(nr.profiles(ds, ds.all_indices(), 1), UsageError);
}

TEST_CASE("smoothed counts are nested, seeded by id and thread invariant") {
  const Classifier m = eqdf::testing::linear_classifier(16, 3, 2);
  const auto ds = eqdf::testing::toy_dataset(12, 16, 3, 4);
  const auto idx = ds.all_indices();
  const SmoothedCounts nested = smoothed_counts(m, ds, idx, 0.3, {10, 100}, 7);
  const SmoothedCounts small = smoothed_counts(m, ds, idx, 0.3, {10}, 7);
  const SmoothedCounts threaded = smoothed_counts(m, ds, idx, 0.3, {10, 100}, 7, 4);
  CHECK(nested.counts[0] == small.counts[0]);
  CHECK(nested.counts == threaded.counts);
  for (std::size_t n = 0; n < 2; ++n)
    for (const auto& row : nested.counts[n]) {
      CHECK(std::accumulate(row.begin(), row.end(), 0u) == nested.draws[n]);
    }
  // Reordering samples leaves each sample's counts unchanged.
  std::vector<std::size_t> rev(idx.rbegin(), idx.rend());
  const SmoothedCounts back = smoothed_counts(m, ds, rev, 0.3, {10, 100}, 7);
  for (std::size_t s = 0; s < idx.size(); ++s) CHECK(back.counts[1][s] == nested.counts[1][idx.size() - 1 - s]);
  const SmoothedCounts other = smoothed_counts(m, ds, idx, 0.3, {10, 100}, 8);
  CHECK(other.counts != nested.counts);
}

TEST_CASE("smoothed rejector abstains when the vote is split") {
  const Classifier m = eqdf::testing::linear_classifier(4, 2, 1);
  SmoothedRejector rs(m, 50.0, 20, 1);
  Rng rng(2);
  const std::vector<double> x(4, 0.0);
  int abstained = 0;
  for (int t = 0; t < 20; ++t) abstained += rs.predict(x, 0.001, rng) == kAbstain;
  CHECK(abstained > 10);
  CHECK_THROWS_AS(SmoothedRejector(m, 0.0, 10, 1).predict(x, 0.5, rng), UsageError);
}

TEST_CASE("a rejector that never abstains has zero false rejection and parity") {
  const auto ds = eqdf::testing::toy_dataset(30, 8, 2, 1);
  const auto grid = alpha_grid();
  for (Axis ax : kAxes) {
    const RejectionCurve c = fpr_curve(AlwaysAnswer{}, ds, ds.all_indices(), ax, grid);
    std::map<std::string, double> aucs;
    for (const auto& [g, s] : c.groups) {
      for (double v : s.values) CHECK(v == 0.0);
      aucs[g] = auc_fpr(c, g);
    }
    CHECK(fpr_parity(aucs) == 0.0);
  }
}

}  // TEST_SUITE
