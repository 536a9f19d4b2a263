// Copyright 2026 The TokSE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "tokse/core/waveform.h"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "bytes.h"
#include "tokse/core/archive.h"
#include "tokse/core/errors.h"

namespace tokse {

void WaveformBuffer::validate() const {
  if (sample_rate_hz <= 0) {
    fail(ErrorKind::kInvalidArgument, "sample rate must be positive");
  }
  for (float s : samples) {
    if (!std::isfinite(s)) fail(ErrorKind::kNonFinite, "waveform has NaN/Inf");
    if (std::abs(s) > 1.0f) {
      fail(ErrorKind::kOutOfRange, "waveform sample outside [-1, 1]");
    }
  }
}

void write_wav(const WaveformBuffer& wave, const std::filesystem::path& path) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  std::string out = "RIFF";
  internal::put_le<std::uint32_t>(out, 36 + 2 * n);
  out += "WAVEfmt ";
  internal::put_le<std::uint32_t>(out, 16);
  internal::put_le<std::uint16_t>(out, 1);  // PCM
  internal::put_le<std::uint16_t>(out, 1);  // mono
  internal::put_le<std::uint32_t>(out, wave.sample_rate_hz);
  internal::put_le<std::uint32_t>(out, wave.sample_rate_hz * 2);
  internal::put_le<std::uint16_t>(out, 2);
  internal::put_le<std::uint16_t>(out, 16);
  out += "data";
  internal::put_le<std::uint32_t>(out, 2 * n);
  for (float s : wave.samples) {
    const float clipped = std::clamp(std::isfinite(s) ? s : 0.0f, -1.0f, 1.0f);
    internal::put_le<std::int16_t>(
        out, static_cast<std::int16_t>(std::lround(clipped * 32767.0f)));
  }
  write_file(path, out);
}

WaveformBuffer read_wav(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  internal::ByteReader reader(bytes);
  if (reader.take(4) != "RIFF") fail(ErrorKind::kMalformedDocument, "not RIFF");
  reader.get<std::uint32_t>();
  if (reader.take(4) != "WAVE") fail(ErrorKind::kMalformedDocument, "not WAVE");
  WaveformBuffer wave;
  int channels = 0;
  int bits = 0;
  bool have_format = false;
  while (reader.remaining() >= 8) {
    const std::string_view id = reader.take(4);
    const auto size = reader.get<std::uint32_t>();
    if (id == "fmt ") {
      const std::string_view body = reader.take(size);
      internal::ByteReader fmt(body);
      const auto format = fmt.get<std::uint16_t>();
      channels = fmt.get<std::uint16_t>();
      wave.sample_rate_hz = static_cast<int>(fmt.get<std::uint32_t>());
      fmt.get<std::uint32_t>();
      fmt.get<std::uint16_t>();
      bits = fmt.get<std::uint16_t>();
      if (format != 1 || bits != 16 || channels != 1) {
        fail(ErrorKind::kMalformedDocument, "only 16-bit PCM mono is supported");
      }
      have_format = true;
    } else if (id == "data") {
      if (!have_format) fail(ErrorKind::kMalformedDocument, "data before fmt");
      const std::string_view body = reader.take(size);
      internal::ByteReader data(body);
      wave.samples.resize(size / 2);
      for (auto& s : wave.samples) {
        s = std::max(-1.0f, data.get<std::int16_t>() / 32767.0f);
      }
      return wave;
    } else {
      reader.take(size + (size & 1));
    }
  }
  fail(ErrorKind::kMalformedDocument, "WAV has no data chunk");
}

}  // namespace tokse
