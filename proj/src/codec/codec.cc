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
#include "tokse/codec/codec.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "tokse/core/errors.h"
#include "tokse/core/random.h"

namespace tokse {
namespace {

constexpr double kEnergyFloor = 1e-8;
constexpr double kPi = std::numbers::pi;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

int frames_for(const WaveformBuffer& wave, double frame_rate_hz) {
  const double exact = wave.size() * frame_rate_hz / wave.sample_rate_hz;
  return static_cast<int>(std::ceil(exact - 1e-9));
}

}  // namespace

Filterbank::Filterbank(int sample_rate_hz, int hop_samples, int num_bands)
    : sample_rate_hz_(sample_rate_hz), hop_(hop_samples), num_bands_(num_bands) {
  if (sample_rate_hz <= 0 || hop_samples <= 0 || num_bands < 1) {
    fail(ErrorKind::kInvalidArgument, "filterbank needs positive rate, hop and band count");
  }
  const int win = 2 * hop_;
  fft_size_ = next_pow2(win);
  window_.resize(win);
  for (int n = 0; n < win; ++n) window_[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / win);

  const int bins = fft_size_ / 2 + 1;
  const double nyquist = 0.5 * sample_rate_hz_;
  std::vector<double> edges(num_bands_ + 2);
  for (int i = 0; i < num_bands_ + 2; ++i) {
    edges[i] = mel_to_hz(hz_to_mel(nyquist) * i / (num_bands_ + 1));
  }
  weights_ = nn::Matrix::Zero(num_bands_, bins);
  for (int b = 0; b < num_bands_; ++b) {
    for (int j = 0; j < bins; ++j) {
      const double f = static_cast<double>(j) * sample_rate_hz_ / fft_size_;
      double w = 0.0;
      if (f > edges[b] && f <= edges[b + 1]) {
        w = (f - edges[b]) / (edges[b + 1] - edges[b]);
      } else if (f > edges[b + 1] && f < edges[b + 2]) {
        w = (edges[b + 2] - f) / (edges[b + 2] - edges[b + 1]);
      }
      weights_(b, j) = w;
    }
    // Narrow low bands can fall between bins; give them the nearest bin.
    if (weights_.row(b).sum() == 0.0) {
      const int j = std::min(bins - 1, static_cast<int>(std::lround(
                                           edges[b + 1] * fft_size_ / sample_rate_hz_)));
      weights_(b, j) = 1.0;
    }
  }
}

nn::Matrix Filterbank::analyze(const WaveformBuffer& wave) const {
  const int n = static_cast<int>(wave.size());
  const int frames = (n + hop_ - 1) / hop_;
  const int win = static_cast<int>(window_.size());
  double window_energy = 0.0;
  for (double w : window_) window_energy += w * w;
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(fft_size_);
  std::vector<std::complex<double>> spectrum;
  Eigen::VectorXd power(fft_size_ / 2 + 1);
  nn::Matrix out(frames, num_bands_);
  for (int t = 0; t < frames; ++t) {
    std::fill(frame.begin(), frame.end(), 0.0);
    const int start = t * hop_ - hop_ / 2;
    for (int i = 0; i < win; ++i) {
      const int s = start + i;
      if (s >= 0 && s < n) frame[i] = window_[i] * wave.samples[s];
    }
    fft.fwd(spectrum, frame);
    for (int j = 0; j < power.size(); ++j) power[j] = std::norm(spectrum[j]) / window_energy;
    const Eigen::VectorXd bands = weights_ * power;
    for (int b = 0; b < num_bands_; ++b) out(t, b) = std::log(bands[b] + kEnergyFloor);
  }
  return out;
}

WaveformBuffer Filterbank::synthesize(const nn::Matrix& features, std::uint64_t seed) const {
  if (features.cols() != num_bands_) {
    fail(ErrorKind::kDimensionMismatch, "feature width does not match the filterbank");
  }
  const int frames = static_cast<int>(features.rows());
  const int bins = fft_size_ / 2 + 1;
  const int win = static_cast<int>(window_.size());
  const Eigen::VectorXd band_width = weights_.rowwise().sum();
  const Eigen::RowVectorXd coverage = weights_.colwise().sum();
  // Hann windows at half overlap leave 3/4 of the power on average.
  const double gain = std::sqrt(fft_size_ / 0.75);

  WaveformBuffer out;
  out.sample_rate_hz = sample_rate_hz_;
  out.samples.assign(static_cast<std::size_t>(frames) * hop_, 0.0f);
  std::vector<double> acc(out.samples.size(), 0.0);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spectrum(bins);
  std::vector<double> frame;
  for (int t = 0; t < frames; ++t) {
    Eigen::VectorXd per_bin_band(num_bands_);
    for (int b = 0; b < num_bands_; ++b) {
      per_bin_band[b] = std::max(0.0, std::exp(features(t, b)) - kEnergyFloor) / band_width[b];
    }
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    for (int j = 0; j < bins; ++j) {
      double p = 0.0;
      if (coverage[j] > 0.0) p = weights_.col(j).dot(per_bin_band) / coverage[j];
      const double phase = 2.0 * kPi * uniform01(rng);
      spectrum[j] = std::polar(gain * std::sqrt(p), phase);
    }
    spectrum[0] = std::abs(spectrum[0]);
    spectrum[bins - 1] = std::abs(spectrum[bins - 1]);
    fft.inv(frame, spectrum);
    const int start = t * hop_ - hop_ / 2;
    for (int i = 0; i < win; ++i) {
      const int s = start + i;
      if (s >= 0 && s < static_cast<int>(acc.size())) acc[s] += window_[i] * frame[i];
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out.samples[i] = static_cast<float>(std::clamp(acc[i], -1.0, 1.0));
  }
  return out;
}

SyntheticCodec::SyntheticCodec(CodecSpec spec, std::uint64_t seed, int num_bands)
    : spec_(std::move(spec)),
      seed_(seed),
      filterbank_(spec_.sample_rate_hz, spec_.hop_samples(), num_bands) {}

SyntheticCodec SyntheticCodec::front_end(const CodecSpec& spec, std::uint64_t seed,
                                         const SyntheticCodecOptions& options,
                                         nn::Matrix* normalized_corpus) {
  spec.validate();
  SyntheticCodec codec(spec, seed, options.num_bands);
  const int sr = spec.sample_rate_hz;
  const double piece_s = 2.0;
  const int pieces = std::max(1, static_cast<int>(std::ceil(options.corpus_seconds / piece_s)));
  std::vector<nn::Matrix> parts;
  Eigen::Index rows = 0;
  for (int i = 0; i < pieces; ++i) {
    const std::uint64_t s = derive_seed(seed, {0xc0de, static_cast<std::uint64_t>(i)});
    Rng rng(s);
    WaveformBuffer w;
    switch (i % 4) {
      case 0:
      case 1:
        w = synthetic_speech(piece_s, sr, s);
        break;
      case 2:
        w = mix_at_snr(synthetic_speech(piece_s, sr, s), synthetic_noise(piece_s, sr, s ^ 1),
                       -5.0 + 20.0 * uniform01(rng));
        break;
      default:
        w = uniform01(rng) < 0.5
                ? synthetic_noise(piece_s, sr, s)
                : sine_sweep(piece_s, sr, 50.0 + 200.0 * uniform01(rng),
                             0.1 * sr + 0.35 * sr * uniform01(rng), 0.1 + 0.5 * uniform01(rng));
        break;
    }
    parts.push_back(codec.filterbank_.analyze(w));
    rows += parts.back().rows();
  }
  nn::Matrix corpus(rows, options.num_bands);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    corpus.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  codec.mean_ = corpus.colwise().mean();
  codec.stddev_ =
      ((corpus.rowwise() - codec.mean_).array().square().colwise().mean().sqrt()).max(1e-3);
  *normalized_corpus =
      (corpus.rowwise() - codec.mean_).array().rowwise() / codec.stddev_.array();
  return codec;
}

SyntheticCodec SyntheticCodec::train(const CodecSpec& spec, std::uint64_t seed,
                                     const SyntheticCodecOptions& options) {
  nn::Matrix residual;
  SyntheticCodec codec = front_end(spec, seed, options, &residual);
  KMeansOptions km;
  km.max_iterations = options.kmeans_iterations;
  for (int k = 0; k < spec.num_codebooks; ++k) {
    km.pin_zero_center = k > 0;
    KMeansResult stage = train_kmeans(residual, spec.codebook_size,
                                      derive_seed(seed, {0x57a6e, static_cast<std::uint64_t>(k)}), km);
    const std::vector<int> labels = stage.quantizer.assign(residual);
    for (Eigen::Index i = 0; i < residual.rows(); ++i) {
      residual.row(i) -= stage.quantizer.centers.row(labels[i]);
    }
    codec.stages_.push_back(std::move(stage.quantizer));
  }
  return codec;
}

nn::Matrix SyntheticCodec::normalized_features(const WaveformBuffer& wave) const {
  if (wave.sample_rate_hz != spec_.sample_rate_hz) {
    fail(ErrorKind::kSampleRateMismatch,
         "waveform at " + std::to_string(wave.sample_rate_hz) + " Hz, codec expects " +
             std::to_string(spec_.sample_rate_hz) + " Hz");
  }
  if (wave.empty()) fail(ErrorKind::kInvalidArgument, "cannot tokenize an empty waveform");
  wave.validate();
  nn::Matrix f = filterbank_.analyze(wave);
  const int frames = frames_for(wave, spec_.frame_rate_hz);
  if (f.rows() != frames) {
    nn::Matrix resized = nn::Matrix::Zero(frames, f.cols());
    const Eigen::Index keep = std::min<Eigen::Index>(frames, f.rows());
    resized.topRows(keep) = f.topRows(keep);
    for (Eigen::Index t = keep; t < frames; ++t) resized.row(t) = f.row(f.rows() - 1);
    f = std::move(resized);
  }
  return (f.rowwise() - mean_).array().rowwise() / stddev_.array();
}

TokenSequence SyntheticCodec::quantize_normalized(const nn::Matrix& z) const {
  const int frames = static_cast<int>(z.rows());
  const int k_count = static_cast<int>(stages_.size());
  std::vector<TokenId> ids(static_cast<std::size_t>(k_count) * frames);
  Eigen::RowVectorXd residual;
  for (int t = 0; t < frames; ++t) {
    residual = z.row(t);
    for (int k = 0; k < k_count; ++k) {
      const int id = stages_[k].nearest(residual.data());
      ids[static_cast<std::size_t>(k) * frames + t] = id;
      residual -= stages_[k].centers.row(id);
    }
  }
  return TokenSequence(spec_, std::move(ids));
}

TokenSequence SyntheticCodec::tokenize(const WaveformBuffer& wave) const {
  return quantize_normalized(normalized_features(wave));
}

nn::Matrix SyntheticCodec::reconstruct_normalized(const TokenSequence& seq, int stages) const {
  if (!seq.spec().same_grid(spec_)) {
    fail(ErrorKind::kSpecMismatch, "token grid does not match codec '" + spec_.name + "'");
  }
  validate_token_sequence(seq);
  const int used = stages < 0 ? seq.num_codebooks() : std::min(stages, seq.num_codebooks());
  nn::Matrix z = nn::Matrix::Zero(seq.num_frames(), filterbank_.num_bands());
  for (int k = 0; k < used; ++k) {
    for (int t = 0; t < seq.num_frames(); ++t) z.row(t) += stages_[k].centers.row(seq.at(k, t));
  }
  return z;
}

WaveformBuffer SyntheticCodec::detokenize(const TokenSequence& seq) const {
  const nn::Matrix z = reconstruct_normalized(seq);
  const nn::Matrix f = (z.array().rowwise() * stddev_.array()).rowwise() + mean_.array();
  return filterbank_.synthesize(f, seed_);
}

SyntheticCodec SyntheticCodec::truncated(int k) const {
  if (k < 1 || k > static_cast<int>(stages_.size())) {
    fail(ErrorKind::kInvalidArgument, "cannot keep " + std::to_string(k) + " of " +
                                          std::to_string(stages_.size()) + " stages");
  }
  SyntheticCodec out = *this;
  out.stages_.resize(k);
  out.spec_.num_codebooks = k;
  return out;
}

void SyntheticCodec::export_to(Archive& archive) const {
  archive.metadata["format"] = "tokse-codec";
  archive.metadata["version"] = 1;
  archive.metadata["type"] = "synthetic";
  archive.metadata["spec"] = spec_;
  archive.metadata["seed"] = seed_;
  archive.metadata["num_bands"] = filterbank_.num_bands();
  for (const auto* v : {&mean_, &stddev_}) {
    ArchiveArray a;
    a.name = v == &mean_ ? "feature_mean" : "feature_std";
    a.shape = {1, v->size()};
    a.data.assign(v->data(), v->data() + v->size());
    archive.arrays.push_back(std::move(a));
  }
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    export_quantizer(stages_[k], archive, "stage." + std::to_string(k));
  }
}

SyntheticCodec SyntheticCodec::import_from(const Archive& archive) {
  const auto& m = archive.metadata;
  if (m.value("format", "") != "tokse-codec" || m.value("type", "") != "synthetic") {
    fail(ErrorKind::kMalformedDocument, "not a synthetic codec checkpoint");
  }
  if (m.value("version", 0) != 1) {
    fail(ErrorKind::kMalformedDocument, "unsupported codec checkpoint version");
  }
  const CodecSpec spec = m.at("spec").get<CodecSpec>();
  spec.validate();
  SyntheticCodec codec(spec, m.at("seed").get<std::uint64_t>(), m.at("num_bands").get<int>());
  const int bands = codec.filterbank_.num_bands();
  for (auto* v : {&codec.mean_, &codec.stddev_}) {
    const ArchiveArray& a = archive.array(v == &codec.mean_ ? "feature_mean" : "feature_std");
    if (static_cast<int>(a.data.size()) != bands) {
      fail(ErrorKind::kMalformedDocument, "feature statistics have the wrong width");
    }
    v->resize(bands);
    for (int i = 0; i < bands; ++i) (*v)[i] = a.data[i];
  }
  for (int k = 0; k < spec.num_codebooks; ++k) {
    KMeansQuantizer q = import_quantizer(archive, "stage." + std::to_string(k));
    if (q.n_clusters() != spec.codebook_size || q.feature_dim() != bands) {
      fail(ErrorKind::kMalformedDocument, "stage codebook shape does not match the spec");
    }
    codec.stages_.push_back(std::move(q));
  }
  return codec;
}

void SyntheticCodec::save(const std::filesystem::path& path) const {
  Archive archive;
  export_to(archive);
  write_archive(archive, path);
}

SyntheticCodec SyntheticCodec::load(const std::filesystem::path& path) {
  return import_from(read_archive(path));
}

KMeansCodec::KMeansCodec(SyntheticCodec front_end, KMeansQuantizer quantizer)
    : spec_(front_end.spec()),
      front_end_(std::move(front_end)),
      quantizer_(std::move(quantizer)) {}

KMeansCodec KMeansCodec::train(const CodecSpec& spec, std::uint64_t seed,
                               const SyntheticCodecOptions& options) {
  if (spec.num_codebooks != 1) {
    fail(ErrorKind::kInvalidArgument, "a k-means codec has exactly one codebook");
  }
  nn::Matrix corpus;
  SyntheticCodec fe = SyntheticCodec::front_end(spec, seed, options, &corpus);
  KMeansOptions km;
  km.max_iterations = options.kmeans_iterations;
  KMeansResult r = train_kmeans(corpus, spec.codebook_size, derive_seed(seed, {0x6b6d}), km);
  return KMeansCodec(std::move(fe), std::move(r.quantizer));
}

TokenSequence KMeansCodec::tokenize(const WaveformBuffer& wave) const {
  const std::vector<int> labels = quantizer_.assign(front_end_.normalized_features(wave));
  return TokenSequence(spec_, std::vector<TokenId>(labels.begin(), labels.end()));
}

WaveformBuffer KMeansCodec::detokenize(const TokenSequence& seq) const {
  if (!seq.spec().same_grid(spec_)) {
    fail(ErrorKind::kSpecMismatch, "token grid does not match codec '" + spec_.name + "'");
  }
  validate_token_sequence(seq);
  nn::Matrix z(seq.num_frames(), quantizer_.feature_dim());
  for (int t = 0; t < seq.num_frames(); ++t) z.row(t) = quantizer_.centers.row(seq.at(0, t));
  const nn::Matrix f = (z.array().rowwise() * front_end_.stddev_.array()).rowwise() +
                       front_end_.mean_.array();
  return front_end_.filterbank_.synthesize(f, front_end_.seed_);
}

void KMeansCodec::export_to(Archive& archive) const {
  front_end_.export_to(archive);
  archive.metadata["type"] = "kmeans";
  export_quantizer(quantizer_, archive, "kmeans.centers");
}

KMeansCodec KMeansCodec::import_from(const Archive& archive) {
  if (archive.metadata.value("type", "") != "kmeans") {
    fail(ErrorKind::kMalformedDocument, "not a k-means codec checkpoint");
  }
  const CodecSpec spec = archive.metadata.at("spec").get<CodecSpec>();
  SyntheticCodec fe(spec, archive.metadata.at("seed").get<std::uint64_t>(),
                    archive.metadata.at("num_bands").get<int>());
  const int bands = fe.filterbank_.num_bands();
  for (auto* v : {&fe.mean_, &fe.stddev_}) {
    const ArchiveArray& a = archive.array(v == &fe.mean_ ? "feature_mean" : "feature_std");
    if (static_cast<int>(a.data.size()) != bands) {
      fail(ErrorKind::kMalformedDocument, "feature statistics have the wrong width");
    }
    v->resize(bands);
    for (int i = 0; i < bands; ++i) (*v)[i] = a.data[i];
  }
  KMeansQuantizer q = import_quantizer(archive, "kmeans.centers");
  if (q.n_clusters() != spec.codebook_size || q.feature_dim() != bands) {
    fail(ErrorKind::kMalformedDocument, "k-means centers do not match the spec");
  }
  return KMeansCodec(std::move(fe), std::move(q));
}

std::unique_ptr<Codec> train_codec(const std::string& kind, const CodecSpec& spec,
                                   std::uint64_t seed, const SyntheticCodecOptions& options) {
  if (kind == "synthetic") {
    return std::make_unique<SyntheticCodec>(SyntheticCodec::train(spec, seed, options));
  }
  if (kind == "kmeans") {
    return std::make_unique<KMeansCodec>(KMeansCodec::train(spec, seed, options));
  }
  fail(ErrorKind::kInvalidArgument, "unknown codec kind '" + kind + "'");
}

void save_codec(const Codec& codec, const std::filesystem::path& path) {
  Archive archive;
  if (const auto* s = dynamic_cast<const SyntheticCodec*>(&codec)) {
    s->export_to(archive);
  } else if (const auto* k = dynamic_cast<const KMeansCodec*>(&codec)) {
    k->export_to(archive);
  } else {
    fail(ErrorKind::kInvalidArgument, "codec type cannot be saved");
  }
  write_archive(archive, path);
}

std::unique_ptr<Codec> load_codec(const std::filesystem::path& path) {
  const Archive archive = read_archive(path);
  const std::string type = archive.metadata.value("type", "");
  if (type == "synthetic") return std::make_unique<SyntheticCodec>(SyntheticCodec::import_from(archive));
  if (type == "kmeans") return std::make_unique<KMeansCodec>(KMeansCodec::import_from(archive));
  fail(ErrorKind::kMalformedDocument, "unknown codec type '" + type + "'");
}

double relative_error(const nn::Matrix& reference, const nn::Matrix& estimate) {
  if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols()) {
    fail(ErrorKind::kDimensionMismatch, "feature grids differ in shape");
  }
  const double denom = reference.squaredNorm();
  return denom > 0.0 ? (reference - estimate).squaredNorm() / denom : 0.0;
}

WaveformBuffer sine_sweep(double duration_s, int sample_rate_hz, double f0_hz, double f1_hz,
                          double amplitude) {
  WaveformBuffer w;
  w.sample_rate_hz = sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::lround(duration_s * sample_rate_hz));
  w.samples.resize(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = f0_hz + (f1_hz - f0_hz) * static_cast<double>(i) / std::max<std::size_t>(1, n);
    phase += 2.0 * kPi * f / sample_rate_hz;
    w.samples[i] = static_cast<float>(amplitude * std::sin(phase));
  }
  return w;
}

WaveformBuffer synthetic_speech(double duration_s, int sample_rate_hz, std::uint64_t seed) {
  Rng rng(seed);
  WaveformBuffer w;
  w.sample_rate_hz = sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::lround(duration_s * sample_rate_hz));
  w.samples.assign(n, 0.0f);
  const double top = std::min(5000.0, 0.45 * sample_rate_hz);
  std::size_t pos = 0;
  double lp = 0.0;
  while (pos < n) {
    const auto len = std::min(
        n - pos, static_cast<std::size_t>((0.08 + 0.22 * uniform01(rng)) * sample_rate_hz));
    const double kind = uniform01(rng);
    const double peak = 0.15 + 0.45 * uniform01(rng);
    std::vector<double> seg(len, 0.0);
    if (kind < 0.6) {
      const double f_start = 90.0 + 160.0 * uniform01(rng);
      const double f_end = f_start * (0.8 + 0.45 * uniform01(rng));
      const double formants[3] = {300.0 + 600.0 * uniform01(rng), 900.0 + 1600.0 * uniform01(rng),
                                  2000.0 + 1500.0 * uniform01(rng)};
      const int harmonics = std::max(1, static_cast<int>(top / std::max(f_start, f_end)));
      std::vector<double> gains(harmonics);
      for (int h = 0; h < harmonics; ++h) {
        const double f = (h + 1) * 0.5 * (f_start + f_end);
        double g = 0.05;
        for (double fm : formants) {
          const double x = (f - fm) / 120.0;
          g += 1.0 / (1.0 + x * x);
        }
        gains[h] = g / std::sqrt(h + 1.0);
      }
      double phase = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        const double f0 = f_start + (f_end - f_start) * static_cast<double>(i) / len;
        phase += 2.0 * kPi * f0 / sample_rate_hz;
        double s = 0.0;
        for (int h = 0; h < harmonics; ++h) s += gains[h] * std::sin((h + 1) * phase);
        seg[i] = s;
      }
    } else if (kind < 0.85) {
      for (std::size_t i = 0; i < len; ++i) {
        const double white = 2.0 * uniform01(rng) - 1.0;
        seg[i] = white - lp;  // high-passed noise
        lp = 0.7 * lp + 0.3 * white;
      }
    } else {
      for (std::size_t i = 0; i < len; ++i) seg[i] = 1e-3 * (2.0 * uniform01(rng) - 1.0);
    }
    double max_abs = 1e-12;
    for (double s : seg) max_abs = std::max(max_abs, std::abs(s));
    const double scale = kind < 0.85 ? peak / max_abs : 1.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double env = std::sqrt(std::sin(kPi * (i + 0.5) / len));
      w.samples[pos + i] = static_cast<float>(scale * env * seg[i]);
    }
    pos += len;
  }
  return w;
}

WaveformBuffer synthetic_noise(double duration_s, int sample_rate_hz, std::uint64_t seed) {
  Rng rng(seed);
  WaveformBuffer w;
  w.sample_rate_hz = sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::lround(duration_s * sample_rate_hz));
  const double pole = 0.95 * uniform01(rng);
  const double mod_hz = 0.5 + 3.5 * uniform01(rng);
  const double hum = uniform01(rng) < 0.3 ? 0.3 : 0.0;
  const double hum_hz = uniform01(rng) < 0.5 ? 50.0 : 60.0;
  std::vector<double> x(n);
  double state = 0.0;
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    state = pole * state + (1.0 - pole) * (2.0 * uniform01(rng) - 1.0);
    const double t = static_cast<double>(i) / sample_rate_hz;
    x[i] = state * (1.0 + 0.5 * std::sin(2.0 * kPi * mod_hz * t)) +
           hum * std::sin(2.0 * kPi * hum_hz * t) * (1.0 - pole);
    energy += x[i] * x[i];
  }
  const double scale = n > 0 && energy > 0.0 ? 0.1 / std::sqrt(energy / n) : 0.0;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = static_cast<float>(std::clamp(scale * x[i], -1.0, 1.0));
  }
  return w;
}

WaveformBuffer mix_at_snr(const WaveformBuffer& clean, const WaveformBuffer& noise,
                          double snr_db) {
  if (clean.sample_rate_hz != noise.sample_rate_hz) {
    fail(ErrorKind::kSampleRateMismatch, "clean and noise sample rates differ");
  }
  WaveformBuffer out = clean;
  if (noise.empty()) return out;
  double pc = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double nv = noise.samples[i % noise.size()];
    pc += static_cast<double>(clean.samples[i]) * clean.samples[i];
    pn += nv * nv;
  }
  if (pn == 0.0) return out;
  const double scale = std::sqrt(std::max(pc, 1e-12) / (pn * std::pow(10.0, snr_db / 10.0)));
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double v = clean.samples[i] + scale * noise.samples[i % noise.size()];
    out.samples[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return out;
}

}  // namespace tokse
