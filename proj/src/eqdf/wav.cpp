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

#include "eqdf/wav.hpp"

#include <algorithm>
#include <cmath>

#include "eqdf/csv.hpp"
#include "eqdf/error.hpp"

namespace eqdf {

namespace {

std::uint32_t u32(std::string_view b, std::size_t off) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[off])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 3])) << 24;
}

std::uint16_t u16(std::string_view b, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[off]) |
                                    static_cast<unsigned char>(b[off + 1]) << 8);
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

std::int16_t to_pcm16(double v) noexcept {
  const double scaled = std::round(v * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

double from_pcm16(std::int16_t v) noexcept { return static_cast<double>(v) / 32768.0; }

WavData parse_wav(std::string_view b, const std::string& source) {
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE")
    throw DataError(source + ": not a RIFF/WAVE file");
  std::size_t off = 12;
  bool have_fmt = false;
  WavData out;
  while (off + 8 <= b.size()) {
    const std::string id(b.substr(off, 4));
    const std::uint32_t size = u32(b, off + 4);
    const std::size_t body = off + 8;
    if (body + size > b.size()) throw DataError(source + ": chunk '" + id + "' runs past end of file");
    if (id == "fmt ") {
      if (size < 16) throw DataError(source + ": chunk 'fmt ' is too short");
      const std::uint16_t format = u16(b, body);
      const std::uint16_t channels = u16(b, body + 2);
      const std::uint16_t bits = u16(b, body + 14);
      std::uint16_t effective = format;
      if (format == 0xFFFE && size >= 26) effective = u16(b, body + 24);  // WAVE_FORMAT_EXTENSIBLE subformat
      if (effective != 1)
        throw DataError(source + ": chunk 'fmt ' declares unsupported encoding " + std::to_string(format) +
                        " (only PCM is supported)");
      if (channels != 1)
        throw DataError(source + ": chunk 'fmt ' declares " + std::to_string(channels) + " channels (mono only)");
      if (bits != 16)
        throw DataError(source + ": chunk 'fmt ' declares " + std::to_string(bits) + "-bit samples (PCM16 only)");
      out.sample_rate = u32(b, body + 4);
      if (out.sample_rate == 0) throw DataError(source + ": chunk 'fmt ' declares a zero sample rate");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError(source + ": chunk 'data' appears before 'fmt '");
      if (size % 2 != 0) throw DataError(source + ": chunk 'data' has an odd byte count for PCM16");
      out.samples.resize(size / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = from_pcm16(static_cast<std::int16_t>(u16(b, body + 2 * i)));
      return out;
    }
    off = body + size + (size & 1u);
  }
  throw DataError(source + (have_fmt ? ": missing 'data' chunk" : ": missing 'fmt ' chunk"));
}

WavData read_wav(const std::filesystem::path& path) { return parse_wav(read_file(path), path.string()); }

std::string encode_wav(std::uint32_t sample_rate, std::span<const double> samples) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string out = "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, sample_rate);
  put32(out, sample_rate * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (double v : samples) put16(out, static_cast<std::uint16_t>(to_pcm16(v)));
  return out;
}

void write_wav(const std::filesystem::path& path, std::uint32_t sample_rate, std::span<const double> samples) {
  write_file(path, encode_wav(sample_rate, samples));
}

std::vector<double> resample_linear(std::span<const double> in, std::uint32_t from_rate, std::uint32_t to_rate) {
  if (from_rate == 0 || to_rate == 0) throw UsageError("sample rates must be positive");
  if (from_rate == to_rate || in.empty()) return {in.begin(), in.end()};
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(in.size()) * to_rate / static_cast<double>(from_rate)));
  std::vector<double> out(n_out);
  const double step = static_cast<double>(from_rate) / to_rate;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * step;
    const auto j = static_cast<std::size_t>(pos);
    if (j + 1 >= in.size()) {
      out[i] = in.back();
    } else {
      const double frac = pos - static_cast<double>(j);
      out[i] = in[j] + frac * (in[j + 1] - in[j]);
    }
  }
  return out;
}

}  // namespace eqdf
