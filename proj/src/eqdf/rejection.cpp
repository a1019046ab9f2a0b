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

#include "eqdf/rejection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "eqdf/error.hpp"
#include "eqdf/parallel.hpp"

namespace eqdf {

int decide(const RejectionProfile& p, double alpha, AbstainWhen when) noexcept {
  const bool abstain = when == AbstainWhen::stat_below_alpha ? p.stat < alpha : p.stat > alpha;
  return abstain ? kAbstain : p.cls;
}

// ---- neural rejection ------------------------------------------------------

std::vector<double> NeuralRejector::decision(std::span<const double> feature) const {
  if (feature.size() != dim_)
    throw UsageError("feature has " + std::to_string(feature.size()) + " values, expected " + std::to_string(dim_));
  const std::size_t m = support_count();
  std::vector<double> kv(m);
  for (std::size_t s = 0; s < m; ++s) kv[s] = rbf(feature, std::span(sv_).subspan(s * dim_, dim_), gamma_);
  std::vector<double> out(bias_.size());
  for (std::size_t c = 0; c < bias_.size(); ++c) {
    double f = bias_[c];
    for (std::size_t s = 0; s < m; ++s) f += coef_[c][s] * kv[s];
    out[c] = f;
  }
  return out;
}

std::vector<double> NeuralRejector::probabilities(std::span<const double> feature) const {
  auto f = decision(feature);
  for (std::size_t c = 0; c < f.size(); ++c) f[c] = platt_[c](f[c]);
  return f;
}

RejectionProfile NeuralRejector::profile(std::span<const double> feature) const {
  const auto p = probabilities(feature);
  const auto it = std::max_element(p.begin(), p.end());
  return {static_cast<int>(it - p.begin()), *it};
}

int NeuralRejector::predict(std::span<const double> feature, double alpha) const {
  if (!(alpha >= 0 && alpha <= 1)) throw UsageError("rejection threshold must lie in [0, 1]");
  return decide(profile(feature), alpha);
}

std::vector<RejectionProfile> NeuralRejector::profiles(const Tensor& features) const {
  if (features.rank() != 2 || features.shape[1] != dim_)
    throw UsageError("features " + shape_string(features.shape) + " do not match dimension " + std::to_string(dim_));
  std::vector<RejectionProfile> out;
  for (std::size_t i = 0; i < features.shape[0]; ++i) out.push_back(profile(features.row(i)));
  return out;
}

std::vector<RejectionProfile> NeuralRejector::profiles(const SubgroupedDataset& ds, std::span<const std::size_t> idx,
                                                       unsigned threads) const {
  if (!extractor_) throw UsageError("neural rejection needs a feature extractor");
  std::vector<RejectionProfile> out(idx.size());
  constexpr std::size_t chunk = 32;
  parallel_for((idx.size() + chunk - 1) / chunk, threads, [&](std::size_t c) {
    const std::size_t lo = c * chunk, hi = std::min(idx.size(), lo + chunk);
    const auto feats = extractor_->extract(ds.batch(idx.subspan(lo, hi - lo)));
    for (std::size_t r = 0; r < hi - lo; ++r) out[lo + r] = profile(feats.row(r));
  });
  return out;
}

NeuralRejector fit_neural_rejection(const Tensor& fit_features, std::span<const int> fit_labels,
                                    const Tensor& calib_features, std::span<const int> calib_labels,
                                    std::size_t num_classes, const NeuralRejectionOptions& opt) {
  if (fit_features.rank() != 2 || fit_features.shape[0] != fit_labels.size() || fit_labels.empty())
    throw UsageError("fit features must be (n, dim) with one label per row");
  if (calib_features.rank() != 2 || calib_features.shape[0] != calib_labels.size() || calib_labels.empty() ||
      calib_features.shape[1] != fit_features.shape[1])
    throw UsageError("calibration features must be (m, dim) with one label per row");
  if (opt.gamma && !(*opt.gamma > 0)) throw UsageError("RBF gamma must be positive");
  if (!fit_features.all_finite() || !calib_features.all_finite())
    throw NumericError("rejection features contain non-finite values");
  const std::size_t n = fit_labels.size(), dim = fit_features.shape[1];
  std::vector<std::size_t> per_class(num_classes, 0);
  for (int y : fit_labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw DataError("fit label outside the class range");
    ++per_class[static_cast<std::size_t>(y)];
  }
  if (std::count_if(per_class.begin(), per_class.end(), [](std::size_t c) { return c > 0; }) < 2)
    throw DataError("neural rejection needs at least two classes in the fit data");
  for (std::size_t c = 0; c < num_classes; ++c)
    if (per_class[c] == 0) throw DataError("class " + std::to_string(c) + " has no fit samples");

  NeuralRejector nr;
  nr.dim_ = dim;
  nr.C_ = opt.C;
  if (opt.gamma) {
    nr.gamma_ = *opt.gamma;
  } else {
    const auto& d = fit_features.data;
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d.size());
    if (!(var > 0)) throw NumericError("fit features are constant; cannot derive an RBF gamma");
    nr.gamma_ = 1.0 / (static_cast<double>(dim) * var);
  }
  const KernelMatrix K = rbf_matrix(fit_features.data, dim, nr.gamma_);
  SmoOptions so{opt.C, opt.tol, opt.max_iter};
  std::vector<bool> used(n, false);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = fit_labels[i] == static_cast<int>(c) ? 1 : -1;
    nr.solutions_.push_back(smo_train(K, y, so));
    nr.bias_.push_back(nr.solutions_.back().b);
    for (std::size_t i = 0; i < n; ++i)
      if (nr.solutions_.back().alpha[i] > 0) used[i] = true;
  }
  std::vector<std::size_t> sv_rows;
  for (std::size_t i = 0; i < n; ++i)
    if (used[i]) sv_rows.push_back(i);
  for (std::size_t i : sv_rows) {
    const auto row = fit_features.row(i);
    nr.sv_.insert(nr.sv_.end(), row.begin(), row.end());
  }
  nr.coef_.assign(num_classes, std::vector<double>(sv_rows.size()));
  for (std::size_t c = 0; c < num_classes; ++c)
    for (std::size_t s = 0; s < sv_rows.size(); ++s) {
      const std::size_t i = sv_rows[s];
      nr.coef_[c][s] = nr.solutions_[c].alpha[i] * (fit_labels[i] == static_cast<int>(c) ? 1.0 : -1.0);
    }
  nr.platt_.assign(num_classes, PlattSigmoid{});
  std::vector<std::vector<double>> calib_dec;
  for (std::size_t i = 0; i < calib_labels.size(); ++i) calib_dec.push_back(nr.decision(calib_features.row(i)));
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<double> f;
    std::vector<std::uint8_t> pos;
    for (std::size_t i = 0; i < calib_labels.size(); ++i) {
      f.push_back(calib_dec[i][c]);
      pos.push_back(calib_labels[i] == static_cast<int>(c) ? 1 : 0);
    }
    nr.platt_[c] = fit_platt(f, pos);
  }
  return nr;
}

// ---- randomized smoothing --------------------------------------------------

double binomial_two_sided_p(std::uint64_t k, std::uint64_t n) {
  if (n == 0) throw UsageError("binomial test needs at least one trial");
  if (k > n) throw UsageError("binomial test: successes exceed trials");
  const std::uint64_t m = std::max(k, n - k);
  if (n <= 62) {
    // Exact integer tail of Pascal's row n.
    std::vector<std::uint64_t> row(n + 1, 0);
    row[0] = 1;
    for (std::uint64_t r = 1; r <= n; ++r)
      for (std::uint64_t i = r; i > 0; --i) row[i] += row[i - 1];
    std::uint64_t tail = 0;
    for (std::uint64_t i = m; i <= n; ++i) tail += row[i];
    return std::min(1.0, std::ldexp(static_cast<double>(tail), 1 - static_cast<int>(n)));
  }
  const double ln2 = std::log(2.0);
  const double lnf = std::lgamma(static_cast<double>(n) + 1.0);
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (std::uint64_t i = m; i <= n; ++i) {
    const double t = lnf - std::lgamma(static_cast<double>(i) + 1.0) - std::lgamma(static_cast<double>(n - i) + 1.0) -
                     static_cast<double>(n) * ln2;
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - peak);
  return std::min(1.0, std::exp(ln2 + peak + std::log(s)));
}

RejectionProfile profile_from_counts(std::span<const std::uint32_t> counts) {
  if (counts.empty()) throw UsageError("vote counts are empty");
  std::size_t a = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[a]) a = c;
  std::uint32_t b = 0;
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (c != a) b = std::max(b, counts[c]);
  const std::uint64_t na = counts[a];
  if (na == 0) throw UsageError("vote counts are all zero");
  return {static_cast<int>(a), binomial_two_sided_p(na, na + b)};
}

std::uint64_t id_key(std::string_view id) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr std::size_t kNoiseChunk = 50;

/// Adds `draws` noisy copies of x to the running counts, in draw order.
void vote(const Model& model, std::span<const double> x, double sigma, std::size_t draws, Rng& rng,
          std::vector<std::uint32_t>& counts) {
  const std::size_t L = x.size();
  std::normal_distribution<double> gauss(0.0, sigma);
  for (std::size_t done = 0; done < draws;) {
    const std::size_t b = std::min(kNoiseChunk, draws - done);
    Tensor batch({b, L});
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t t = 0; t < L; ++t) batch.data[r * L + t] = x[t] + gauss(rng);
    for (int c : predict(model, batch)) ++counts[static_cast<std::size_t>(c)];
    done += b;
  }
}

}  // namespace

std::vector<std::uint32_t> smoothed_counts(const Model& model, std::span<const double> x, double sigma,
                                           std::size_t draws, Rng& rng) {
  if (!(sigma > 0)) throw UsageError("smoothing sigma must be positive");
  if (draws == 0) throw UsageError("smoothing needs at least one draw");
  std::vector<std::uint32_t> counts(model.num_classes(), 0);
  vote(model, x, sigma, draws, rng, counts);
  return counts;
}

SmoothedCounts smoothed_counts(const Model& model, const SubgroupedDataset& ds, std::span<const std::size_t> idx,
                               double sigma, std::vector<std::size_t> draws, std::uint64_t seed, unsigned threads) {
  if (!(sigma > 0)) throw UsageError("smoothing sigma must be positive");
  if (draws.empty()) throw UsageError("smoothing needs at least one draw count");
  std::sort(draws.begin(), draws.end());
  draws.erase(std::unique(draws.begin(), draws.end()), draws.end());
  if (draws.front() == 0) throw UsageError("smoothing draw counts must be >= 1");
  if (model.num_classes() != ds.num_classes()) throw DataError("model and dataset disagree on the class count");
  SmoothedCounts out;
  out.draws = draws;
  out.counts.assign(draws.size(), std::vector<std::vector<std::uint32_t>>(idx.size()));
  parallel_for(idx.size(), threads, [&](std::size_t s) {
    const Sample& sample = ds[idx[s]];
    Rng rng = stream_rng(seed, id_key(sample.id));
    std::vector<std::uint32_t> counts(model.num_classes(), 0);
    std::size_t done = 0;
    for (std::size_t d = 0; d < draws.size(); ++d) {
      vote(model, sample.waveform, sigma, draws[d] - done, rng, counts);
      done = draws[d];
      out.counts[d][s] = counts;
    }
  });
  return out;
}

SmoothedRejector::SmoothedRejector(const Model& model, double sigma, std::size_t draws, std::uint64_t seed)
    : model_(&model), sigma_(sigma), draws_(draws), seed_(seed) {
  if (!(sigma > 0)) throw UsageError("smoothing sigma must be positive");
  if (draws == 0) throw UsageError("smoothing needs at least one draw");
}

int SmoothedRejector::predict(std::span<const double> x, double alpha, Rng& rng) const {
  if (!(alpha > 0 && alpha <= 1)) throw UsageError("smoothing threshold must lie in (0, 1]");
  const auto counts = smoothed_counts(*model_, x, sigma_, draws_, rng);
  return Rejector::decide(profile_from_counts(counts), alpha);
}

std::vector<RejectionProfile> SmoothedRejector::profiles(const SubgroupedDataset& ds,
                                                         std::span<const std::size_t> idx, unsigned threads) const {
  const auto sc = smoothed_counts(*model_, ds, idx, sigma_, {draws_}, seed_, threads);
  std::vector<RejectionProfile> out;
  for (const auto& c : sc.counts[0]) out.push_back(profile_from_counts(c));
  return out;
}

// ---- curves ----------------------------------------------------------------

std::vector<double> alpha_grid(double lo, double hi, double step) {
  if (!(step > 0) || !(hi >= lo)) throw UsageError("alpha grid needs step > 0 and hi >= lo");
  const double inv = 1.0 / step;
  const bool decimal = std::abs(inv - std::round(inv)) < 1e-9;
  const auto first = static_cast<long long>(std::llround(lo / step));
  const auto last = static_cast<long long>(std::llround(hi / step));
  std::vector<double> out;
  for (long long k = first; k <= last; ++k)
    out.push_back(decimal ? static_cast<double>(k) / std::round(inv) : static_cast<double>(k) * step);
  return out;
}

std::vector<std::vector<std::uint8_t>> abstentions(const std::vector<RejectionProfile>& profiles,
                                                   std::span<const double> alphas, AbstainWhen when) {
  std::vector<std::vector<std::uint8_t>> hits(alphas.size(), std::vector<std::uint8_t>(profiles.size(), 0));
  for (std::size_t a = 0; a < alphas.size(); ++a)
    for (std::size_t s = 0; s < profiles.size(); ++s)
      hits[a][s] = decide(profiles[s], alphas[a], when) == kAbstain ? 1 : 0;
  return hits;
}

RejectionCurve fpr_curve(const std::vector<RejectionProfile>& profiles, AbstainWhen when,
                         const std::vector<std::array<std::string, 3>>& sample_groups, Axis axis,
                         std::span<const double> alphas, const std::vector<std::string>& declared) {
  if (profiles.size() != sample_groups.size()) throw UsageError("one subgroup tuple per profile is required");
  return curve_from_indicators(axis, alphas, abstentions(profiles, alphas, when), sample_groups, declared);
}

RejectionCurve fpr_curve(const Rejector& rejector, const SubgroupedDataset& clean, std::span<const std::size_t> idx,
                         Axis axis, std::span<const double> alphas, unsigned threads) {
  const auto profiles = rejector.profiles(clean, idx, threads);
  std::vector<std::array<std::string, 3>> groups;
  for (std::size_t i : idx) groups.push_back(clean[i].groups);
  return fpr_curve(profiles, rejector.abstain_when(), groups, axis, alphas);
}

}  // namespace eqdf
