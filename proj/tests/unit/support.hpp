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

#ifndef EQDF_TESTS_SUPPORT_HPP
#define EQDF_TESTS_SUPPORT_HPP

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "eqdf/dataset.hpp"
#include "eqdf/model.hpp"
#include "eqdf/rng.hpp"

namespace eqdf::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("eqdf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.data) v = u(rng);
  return t;
}

/// Linear softmax classifier on flat (n, len) input.
inline Classifier linear_classifier(std::size_t len, std::size_t classes, std::uint64_t seed) {
  Network net({LayerSpec::linear(len, classes, "head"), LayerSpec::softmax_xent()}, ActShape{len, 0});
  Rng rng(seed);
  net.init_params(rng);
  return Classifier("linear", std::move(net), "head");
}

/// A tiny dataset where sample i has label i % classes and groups drawn
/// round-robin from {a, b}, {x, y, z} and {p}.
inline SubgroupedDataset toy_dataset(std::size_t n, std::size_t len, std::size_t classes, std::uint64_t seed,
                                     Split split = Split::test) {
  SubgroupedDataset ds(classes, 8000, len);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  static const char* g[] = {"a", "b"};
  static const char* a[] = {"x", "y", "z"};
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = "s" + std::to_string(i);
    s.split = split;
    s.label = static_cast<int>(i % classes);
    s.groups = {g[i % 2], a[i % 3], "p"};
    s.waveform.resize(len);
    for (double& v : s.waveform) v = u(rng);
    ds.add(std::move(s));
  }
  return ds;
}

}  // namespace eqdf::testing

#endif  // EQDF_TESTS_SUPPORT_HPP
