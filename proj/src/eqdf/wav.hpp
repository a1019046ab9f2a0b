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

#ifndef EQDF_WAV_HPP
#define EQDF_WAV_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eqdf {

struct WavData {
  std::uint32_t sample_rate = 0;
  std::vector<double> samples;  // [-1, 1)
};

/// RIFF/WAVE, PCM16, mono. Unknown chunks are skipped.
WavData parse_wav(std::string_view bytes, const std::string& source);
WavData read_wav(const std::filesystem::path& path);

/// Quantizes to PCM16 with rounding; values outside [-1, 1] are clipped.
std::string encode_wav(std::uint32_t sample_rate, std::span<const double> samples);
void write_wav(const std::filesystem::path& path, std::uint32_t sample_rate, std::span<const double> samples);

std::int16_t to_pcm16(double v) noexcept;
double from_pcm16(std::int16_t v) noexcept;

/// Linear-interpolation resampling.
std::vector<double> resample_linear(std::span<const double> in, std::uint32_t from_rate, std::uint32_t to_rate);

}  // namespace eqdf

#endif  // EQDF_WAV_HPP
