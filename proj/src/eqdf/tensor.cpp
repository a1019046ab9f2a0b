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

#include "eqdf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "eqdf/error.hpp"

namespace eqdf {

std::size_t shape_product(std::span<const std::size_t> shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(std::vector<std::size_t> shape_, double fill_value)
    : shape(std::move(shape_)), data(shape_product(shape), fill_value) {}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (shape_product(shape) != data.size())
    throw UsageError("tensor shape " + shape_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
}

std::span<const double> Tensor::row(std::size_t i) const {
  const std::size_t stride = shape.empty() ? 0 : data.size() / shape[0];
  return std::span<const double>(data).subspan(i * stride, stride);
}

std::span<double> Tensor::row(std::size_t i) {
  const std::size_t stride = shape.empty() ? 0 : data.size() / shape[0];
  return std::span<double>(data).subspan(i * stride, stride);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

Tensor stack_rows(std::span<const std::vector<double>* const> rows) {
  if (rows.empty()) throw UsageError("cannot stack an empty row list");
  const std::size_t len = rows.front()->size();
  Tensor out({rows.size(), len});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->size() != len) throw UsageError("ragged rows in stack_rows");
    std::copy(rows[i]->begin(), rows[i]->end(), out.data.begin() + static_cast<std::ptrdiff_t>(i * len));
  }
  return out;
}

}  // namespace eqdf
