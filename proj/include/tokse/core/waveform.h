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

#ifndef TOKSE_CORE_WAVEFORM_H_
#define TOKSE_CORE_WAVEFORM_H_

#include <filesystem>
#include <vector>

namespace tokse {

// Mono audio with samples in [-1, 1].
struct WaveformBuffer {
  std::vector<float> samples;
  int sample_rate_hz = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  // Throws kNonFinite for NaN/Inf, kOutOfRange for |x| > 1 and
  // kInvalidArgument for a non-positive rate.
  void validate() const;
};

// 16-bit PCM mono WAV.
void write_wav(const WaveformBuffer& wave, const std::filesystem::path& path);
WaveformBuffer read_wav(const std::filesystem::path& path);

}  // namespace tokse

#endif  // TOKSE_CORE_WAVEFORM_H_
