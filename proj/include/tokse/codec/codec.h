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
#ifndef TOKSE_CODEC_CODEC_H_
#define TOKSE_CODEC_CODEC_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tokse/codec/kmeans.h"
#include "tokse/core/codec_spec.h"
#include "tokse/core/token_sequence.h"
#include "tokse/core/waveform.h"
#include "tokse/nn/autograd.h"

namespace tokse {

// Waveform <-> token grid. Implementations are immutable once built.
class Codec {
 public:
  virtual ~Codec() = default;

  virtual const CodecSpec& spec() const = 0;
  // T = ceil(duration * frame rate). Throws kSampleRateMismatch,
  // kNonFinite or kInvalidArgument (empty input).
  virtual TokenSequence tokenize(const WaveformBuffer& wave) const = 0;
  // T frames of hop_samples() each. Throws kSpecMismatch.
  virtual WaveformBuffer detokenize(const TokenSequence& seq) const = 0;
};

// Mel-spaced triangular filterbank over Hann-windowed frames. Frame t is
// centred on sample t * hop + hop / 2 and spans two hops.
class Filterbank {
 public:
  Filterbank(int sample_rate_hz, int hop_samples, int num_bands = 24);

  int num_bands() const { return num_bands_; }
  int hop() const { return hop_; }
  int sample_rate_hz() const { return sample_rate_hz_; }

  // T x num_bands log band energies.
  nn::Matrix analyze(const WaveformBuffer& wave) const;
  // Noise-excited resynthesis with deterministic random phase; T * hop
  // samples, clamped to [-1, 1].
  WaveformBuffer synthesize(const nn::Matrix& features, std::uint64_t seed) const;

 private:
  int sample_rate_hz_;
  int hop_;
  int num_bands_;
  int fft_size_;
  std::vector<double> window_;
  nn::Matrix weights_;  // num_bands x (fft_size / 2 + 1)
};

struct SyntheticCodecOptions {
  int num_bands = 24;
  double corpus_seconds = 40.0;
  int kmeans_iterations = 300;
};

// Residual vector quantizer over normalized filterbank features. Stage k
// quantizes what stages 0..k-1 left; stages after the first keep a zero
// codeword so adding a stage never increases the error.
class SyntheticCodec : public Codec {
 public:
  // Learns the stage codebooks from a corpus generated from `seed`.
  static SyntheticCodec train(const CodecSpec& spec, std::uint64_t seed,
                              const SyntheticCodecOptions& options = {});

  const CodecSpec& spec() const override { return spec_; }
  TokenSequence tokenize(const WaveformBuffer& wave) const override;
  WaveformBuffer detokenize(const TokenSequence& seq) const override;

  // Features in the codec's normalized domain.
  nn::Matrix normalized_features(const WaveformBuffer& wave) const;
  TokenSequence quantize_normalized(const nn::Matrix& z) const;
  // Sum of the first `stages` codewords per frame (all stages when < 0).
  nn::Matrix reconstruct_normalized(const TokenSequence& seq, int stages = -1) const;

  // Same codebooks, keeping only the first `k` stages.
  SyntheticCodec truncated(int k) const;

  const Filterbank& filterbank() const { return filterbank_; }
  const std::vector<KMeansQuantizer>& stages() const { return stages_; }
  std::uint64_t seed() const { return seed_; }

  void export_to(Archive& archive) const;
  static SyntheticCodec import_from(const Archive& archive);
  void save(const std::filesystem::path& path) const;
  static SyntheticCodec load(const std::filesystem::path& path);

 private:
  friend class KMeansCodec;
  SyntheticCodec(CodecSpec spec, std::uint64_t seed, int num_bands);

  // Filterbank statistics from the seeded corpus; no codebooks.
  static SyntheticCodec front_end(const CodecSpec& spec, std::uint64_t seed,
                                  const SyntheticCodecOptions& options, nn::Matrix* corpus);

  CodecSpec spec_;
  std::uint64_t seed_ = 0;
  Filterbank filterbank_;
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd stddev_;
  std::vector<KMeansQuantizer> stages_;
};

// One k-means codebook over normalized filterbank features (K = 1).
// Detokenization looks up the assigned centers and resynthesizes.
class KMeansCodec : public Codec {
 public:
  static KMeansCodec train(const CodecSpec& spec, std::uint64_t seed,
                           const SyntheticCodecOptions& options = {});

  const CodecSpec& spec() const override { return spec_; }
  TokenSequence tokenize(const WaveformBuffer& wave) const override;
  WaveformBuffer detokenize(const TokenSequence& seq) const override;

  const KMeansQuantizer& quantizer() const { return quantizer_; }

  void export_to(Archive& archive) const;
  static KMeansCodec import_from(const Archive& archive);

 private:
  KMeansCodec(SyntheticCodec front_end, KMeansQuantizer quantizer);

  CodecSpec spec_;
  SyntheticCodec front_end_;  // supplies filterbank and normalization only
  KMeansQuantizer quantizer_;
};

// Trains the codec described by kind ("synthetic" or "kmeans").
std::unique_ptr<Codec> train_codec(const std::string& kind, const CodecSpec& spec,
                                   std::uint64_t seed, const SyntheticCodecOptions& options);
void save_codec(const Codec& codec, const std::filesystem::path& path);
std::unique_ptr<Codec> load_codec(const std::filesystem::path& path);

// Relative squared error ||a - b||^2 / ||a||^2 (0 when a is zero).
double relative_error(const nn::Matrix& reference, const nn::Matrix& estimate);

// Test signals.
WaveformBuffer sine_sweep(double duration_s, int sample_rate_hz, double f0_hz = 100.0,
                          double f1_hz = 4000.0, double amplitude = 0.5);
// Voiced/unvoiced syllable-like sequence with pitch glides and formants.
WaveformBuffer synthetic_speech(double duration_s, int sample_rate_hz, std::uint64_t seed);
// Coloured noise with slow amplitude modulation.
WaveformBuffer synthetic_noise(double duration_s, int sample_rate_hz, std::uint64_t seed);
// clean + noise scaled to the requested SNR, clamped to [-1, 1].
WaveformBuffer mix_at_snr(const WaveformBuffer& clean, const WaveformBuffer& noise,
                          double snr_db);

}  // namespace tokse

#endif  // TOKSE_CODEC_CODEC_H_
