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
#ifndef TOKSE_EXPERIMENT_CONFIG_H_
#define TOKSE_EXPERIMENT_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokse/channel_lab/channel.h"
#include "tokse/core/codec_spec.h"
#include "tokse/decoding/decoding.h"
#include "tokse/model/model.h"
#include "tokse/training/training.h"

namespace tokse {

// Waveform front-end. "none" means the data are token grids already.
struct CodecSection {
  std::string kind = "none";  // none | synthetic | kmeans
  CodecSpec spec;
  std::uint64_t seed = 0;
  double corpus_seconds = 40.0;
  int kmeans_iterations = 300;
  int num_bands = 24;

  void validate() const;
};

struct DataSection {
  // testbed: strong-transition channel built from the fields below.
  // channel: ChannelSpec inline ("channel") or from a file ("channel_path").
  // audio: synthetic speech mixed with noise, tokenized by the codec.
  // manifest: existing train/valid/test manifests.
  std::string kind = "testbed";
  double snr_db = -5.0;
  double stay = 0.9;
  int num_codebooks = 2;
  int codebook_size = 4;
  std::uint64_t channel_seed = 1;
  std::optional<ChannelSpec> channel;
  std::string channel_path;
  int frames = 8;
  double duration_s = 2.0;
  int train_count = 2000;
  int valid_count = 200;
  int test_count = 500;
  std::uint64_t seed = 0;
  std::string train_manifest;
  std::string valid_manifest;
  std::string test_manifest;

  void validate() const;
};

struct SweepSection {
  std::string axis = "snr";  // snr | bitrate
  std::vector<double> values{-10.0, -5.0, 0.0, 5.0};

  void validate() const;
};

struct ExperimentConfig {
  CodecSection codec;
  ModelConfig model = default_set_config();
  // Counterpart trained next to `model` by sweeps; derived when absent.
  std::optional<ModelConfig> baseline_model;
  TrainConfig train;
  BeamConfig decode;
  DataSection data;
  SweepSection sweep;
  std::string output_dir = "tokse_out";

  // Applies one seed to data, codec, model initialization and training.
  void set_seed(std::uint64_t seed);
  // Model of the other kind with matched depth and width.
  ModelConfig counterpart() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const CodecSection& c);
void from_json(const nlohmann::json& j, CodecSection& c);
void to_json(nlohmann::json& j, const DataSection& d);
void from_json(const nlohmann::json& j, DataSection& d);
void to_json(nlohmann::json& j, const SweepSection& s);
void from_json(const nlohmann::json& j, SweepSection& s);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

// JSON document with sections codec, model, baseline_model, train, decode,
// data, sweep and output_dir. Unknown keys are rejected. Relative input
// paths resolve against `base_dir` and must exist; output_dir stays
// relative to the working directory.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace tokse

#endif  // TOKSE_EXPERIMENT_CONFIG_H_
