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

#ifndef EQDF_REJECTION_HPP
#define EQDF_REJECTION_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqdf/dataset.hpp"
#include "eqdf/metrics.hpp"
#include "eqdf/model.hpp"
#include "eqdf/rng.hpp"
#include "eqdf/svm.hpp"

namespace eqdf {

inline constexpr int kAbstain = -1;

/// Threshold-independent summary of one input: the class a rejector would
/// return and the statistic compared against the threshold.
struct RejectionProfile {
  int cls = 0;
  double stat = 0.0;
};

enum class AbstainWhen { stat_below_alpha, stat_above_alpha };

int decide(const RejectionProfile& p, double alpha, AbstainWhen when) noexcept;

class Rejector {
 public:
  virtual ~Rejector() = default;
  virtual AbstainWhen abstain_when() const noexcept = 0;
  virtual std::vector<RejectionProfile> profiles(const SubgroupedDataset& ds, std::span<const std::size_t> idx,
                                                 unsigned threads) const = 0;

  int decide(const RejectionProfile& p, double alpha) const noexcept { return eqdf::decide(p, alpha, abstain_when()); }
};

struct NeuralRejectionOptions {
  double C = 1.0;
  std::optional<double> gamma;  // default 1 / (dim * variance of the fit features)
  double tol = 1e-3;
  long max_iter = 100000;
};

/// One-vs-rest RBF SVMs over penultimate features with a per-class sigmoid
/// calibration. Abstains when the largest calibrated probability is below
/// the threshold.
class NeuralRejector final : public Rejector {
 public:
  std::size_t num_classes() const noexcept { return bias_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  double gamma() const noexcept { return gamma_; }
  double C() const noexcept { return C_; }
  const std::vector<BinarySvm>& solutions() const noexcept { return solutions_; }
  const std::vector<PlattSigmoid>& calibration() const noexcept { return platt_; }
  std::size_t support_count() const noexcept { return sv_.size() / std::max<std::size_t>(dim_, 1); }

  /// Raw one-vs-rest decision values.
  std::vector<double> decision(std::span<const double> feature) const;
  std::vector<double> probabilities(std::span<const double> feature) const;
  RejectionProfile profile(std::span<const double> feature) const;
  int predict(std::span<const double> feature, double alpha) const;

  /// Attaches the extractor used by profiles(); must be set for dataset input.
  void set_extractor(const FeatureExtractor* fx) noexcept { extractor_ = fx; }

  AbstainWhen abstain_when() const noexcept override { return AbstainWhen::stat_below_alpha; }
  std::vector<RejectionProfile> profiles(const SubgroupedDataset& ds, std::span<const std::size_t> idx,
                                         unsigned threads) const override;
  std::vector<RejectionProfile> profiles(const Tensor& features) const;

  friend NeuralRejector fit_neural_rejection(const Tensor&, std::span<const int>, const Tensor&,
                                             std::span<const int>, std::size_t, const NeuralRejectionOptions&);

 private:
  std::size_t dim_ = 0;
  double gamma_ = 0.0;
  double C_ = 1.0;
  std::vector<double> sv_;                 // (m, dim) union of support vectors
  std::vector<std::vector<double>> coef_;  // [class][m] = alpha * y
  std::vector<double> bias_;
  std::vector<PlattSigmoid> platt_;
  std::vector<BinarySvm> solutions_;       // dual variables over the fit set
  const FeatureExtractor* extractor_ = nullptr;
};

/// Fits on (fit_features, fit_labels) and calibrates on the disjoint
/// calibration set. Features are (n, dim) tensors.
NeuralRejector fit_neural_rejection(const Tensor& fit_features, std::span<const int> fit_labels,
                                    const Tensor& calib_features, std::span<const int> calib_labels,
                                    std::size_t num_classes, const NeuralRejectionOptions& opt = {});

/// Exact two-sided binomial test against p = 0.5:
/// min(1, 2 P(X >= max(k, n - k))), X ~ Binomial(n, 1/2).
double binomial_two_sided_p(std::uint64_t k, std::uint64_t n);

/// Class index with the most votes (lowest index on ties) and the p-value of
/// the top-two counts.
RejectionProfile profile_from_counts(std::span<const std::uint32_t> counts);

/// Vote counts under Gaussian input noise, one row per sample. Draws are
/// nested: the counts for a smaller N are the first N draws of the larger.
struct SmoothedCounts {
  std::vector<std::size_t> draws;                           // ascending N values
  std::vector<std::vector<std::vector<std::uint32_t>>> counts;  // [N][sample][class]
};

/// Noise for each sample comes from its own stream keyed by (seed, sample id).
SmoothedCounts smoothed_counts(const Model& model, const SubgroupedDataset& ds, std::span<const std::size_t> idx,
                               double sigma, std::vector<std::size_t> draws, std::uint64_t seed,
                               unsigned threads = 1);

std::vector<std::uint32_t> smoothed_counts(const Model& model, std::span<const double> x, double sigma,
                                           std::size_t draws, Rng& rng);

/// Abstains when the binomial p-value of the top-two vote counts exceeds the
/// threshold.
class SmoothedRejector final : public Rejector {
 public:
  SmoothedRejector(const Model& model, double sigma, std::size_t draws, std::uint64_t seed);

  double sigma() const noexcept { return sigma_; }
  std::size_t draws() const noexcept { return draws_; }

  int predict(std::span<const double> x, double alpha, Rng& rng) const;

  AbstainWhen abstain_when() const noexcept override { return AbstainWhen::stat_above_alpha; }
  std::vector<RejectionProfile> profiles(const SubgroupedDataset& ds, std::span<const std::size_t> idx,
                                         unsigned threads) const override;

 private:
  const Model* model_;
  double sigma_;
  std::size_t draws_;
  std::uint64_t seed_;
};

/// Grid from lo to hi inclusive in `step` increments (rounded to the step).
std::vector<double> alpha_grid(double lo = 0.001, double hi = 1.0, double step = 1e-3);

/// Abstention indicators [alpha][sample].
std::vector<std::vector<std::uint8_t>> abstentions(const std::vector<RejectionProfile>& profiles,
                                                   std::span<const double> alphas, AbstainWhen when);

/// Fraction of clean samples rejected per subgroup and threshold.
RejectionCurve fpr_curve(const std::vector<RejectionProfile>& profiles, AbstainWhen when,
                         const std::vector<std::array<std::string, 3>>& sample_groups, Axis axis,
                         std::span<const double> alphas, const std::vector<std::string>& declared = {});

RejectionCurve fpr_curve(const Rejector& rejector, const SubgroupedDataset& clean, std::span<const std::size_t> idx,
                         Axis axis, std::span<const double> alphas, unsigned threads = 1);

std::uint64_t id_key(std::string_view id) noexcept;

}  // namespace eqdf

#endif  // EQDF_REJECTION_HPP
