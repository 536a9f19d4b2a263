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
#include "tokse/experiment/config.h"

#include <cmath>

#include "tokse/core/archive.h"
#include "tokse/core/errors.h"
#include "tokse/core/json_util.h"

namespace tokse {

void CodecSection::validate() const {
  if (kind != "none" && kind != "synthetic" && kind != "kmeans") {
    fail(ErrorKind::kInvalidArgument, "codec.kind must be none, synthetic or kmeans");
  }
  if (kind == "none") return;
  spec.validate();
  if (kind == "kmeans" && spec.num_codebooks != 1) {
    fail(ErrorKind::kInvalidArgument, "a k-means codec has exactly one codebook");
  }
  if (!(corpus_seconds > 0.0) || kmeans_iterations < 1 || num_bands < 1) {
    fail(ErrorKind::kInvalidArgument, "codec corpus, iterations and bands must be positive");
  }
}

void to_json(nlohmann::json& j, const CodecSection& c) {
  j = c.spec;
  j["kind"] = c.kind;
  j["seed"] = c.seed;
  j["corpus_seconds"] = c.corpus_seconds;
  j["kmeans_iterations"] = c.kmeans_iterations;
  j["num_bands"] = c.num_bands;
}

void from_json(const nlohmann::json& j, CodecSection& c) {
  require_known_keys(j, "codec",
                     {"kind", "seed", "corpus_seconds", "kmeans_iterations", "num_bands",
                      "num_codebooks", "codebook_size", "frame_rate_hz", "sample_rate_hz",
                      "name"});
  get_optional(j, "kind", c.kind);
  get_optional(j, "seed", c.seed);
  get_optional(j, "corpus_seconds", c.corpus_seconds);
  get_optional(j, "kmeans_iterations", c.kmeans_iterations);
  get_optional(j, "num_bands", c.num_bands);
  get_optional(j, "num_codebooks", c.spec.num_codebooks);
  get_optional(j, "codebook_size", c.spec.codebook_size);
  get_optional(j, "frame_rate_hz", c.spec.frame_rate_hz);
  get_optional(j, "sample_rate_hz", c.spec.sample_rate_hz);
  get_optional(j, "name", c.spec.name);
  c.validate();
}

void DataSection::validate() const {
  if (kind != "testbed" && kind != "channel" && kind != "audio" && kind != "manifest") {
    fail(ErrorKind::kInvalidArgument, "data.kind must be testbed, channel, audio or manifest");
  }
  if (kind == "manifest") {
    if (train_manifest.empty() || valid_manifest.empty() || test_manifest.empty()) {
      fail(ErrorKind::kInvalidArgument, "manifest data needs train, valid and test manifests");
    }
    return;
  }
  if (train_count < 1 || valid_count < 1 || test_count < 1) {
    fail(ErrorKind::kInvalidArgument, "split counts must be positive");
  }
  if (kind == "audio") {
    if (!(duration_s > 0.0)) fail(ErrorKind::kInvalidArgument, "duration_s must be positive");
    return;
  }
  if (frames < 1) fail(ErrorKind::kInvalidArgument, "frames must be positive");
  if (kind == "testbed") {
    if (!(stay >= 0.0 && stay <= 1.0)) fail(ErrorKind::kInvalidArgument, "stay must lie in [0, 1]");
    ar_testbed_spec(snr_db, channel_seed, num_codebooks, codebook_size, stay).validate();
  } else if (!channel && channel_path.empty()) {
    fail(ErrorKind::kInvalidArgument, "channel data needs 'channel' or 'channel_path'");
  }
}

void to_json(nlohmann::json& j, const DataSection& d) {
  j = nlohmann::json{{"kind", d.kind},
                     {"snr_db", d.snr_db},
                     {"stay", d.stay},
                     {"num_codebooks", d.num_codebooks},
                     {"codebook_size", d.codebook_size},
                     {"channel_seed", d.channel_seed},
                     {"frames", d.frames},
                     {"duration_s", d.duration_s},
                     {"train_count", d.train_count},
                     {"valid_count", d.valid_count},
                     {"test_count", d.test_count},
                     {"seed", d.seed}};
  if (d.channel) j["channel"] = *d.channel;
  if (!d.channel_path.empty()) j["channel_path"] = d.channel_path;
  if (!d.train_manifest.empty()) j["train_manifest"] = d.train_manifest;
  if (!d.valid_manifest.empty()) j["valid_manifest"] = d.valid_manifest;
  if (!d.test_manifest.empty()) j["test_manifest"] = d.test_manifest;
}

void from_json(const nlohmann::json& j, DataSection& d) {
  require_known_keys(j, "data",
                     {"kind", "snr_db", "stay", "num_codebooks", "codebook_size",
                      "channel_seed", "channel", "channel_path", "frames", "duration_s",
                      "train_count", "valid_count", "test_count", "seed", "train_manifest",
                      "valid_manifest", "test_manifest"});
  get_optional(j, "kind", d.kind);
  get_optional(j, "snr_db", d.snr_db);
  get_optional(j, "stay", d.stay);
  get_optional(j, "num_codebooks", d.num_codebooks);
  get_optional(j, "codebook_size", d.codebook_size);
  get_optional(j, "channel_seed", d.channel_seed);
  if (j.contains("channel")) d.channel = j.at("channel").get<ChannelSpec>();
  get_optional(j, "channel_path", d.channel_path);
  get_optional(j, "frames", d.frames);
  get_optional(j, "duration_s", d.duration_s);
  get_optional(j, "train_count", d.train_count);
  get_optional(j, "valid_count", d.valid_count);
  get_optional(j, "test_count", d.test_count);
  get_optional(j, "seed", d.seed);
  get_optional(j, "train_manifest", d.train_manifest);
  get_optional(j, "valid_manifest", d.valid_manifest);
  get_optional(j, "test_manifest", d.test_manifest);
}

void SweepSection::validate() const {
  if (axis != "snr" && axis != "bitrate") {
    fail(ErrorKind::kInvalidArgument, "sweep.axis must be snr or bitrate");
  }
  if (values.empty()) fail(ErrorKind::kInvalidArgument, "sweep.values is empty");
  if (axis == "bitrate") {
    for (double v : values) {
      if (v < 1.0 || v != std::floor(v)) {
        fail(ErrorKind::kInvalidArgument, "bitrate sweep values are codebook counts (K >= 1)");
      }
    }
  }
}

void to_json(nlohmann::json& j, const SweepSection& s) {
  j = nlohmann::json{{"axis", s.axis}, {"values", s.values}};
}

void from_json(const nlohmann::json& j, SweepSection& s) {
  require_known_keys(j, "sweep", {"axis", "values"});
  get_optional(j, "axis", s.axis);
  get_optional(j, "values", s.values);
  s.validate();
}

void ExperimentConfig::set_seed(std::uint64_t seed) {
  data.seed = seed;
  codec.seed = seed;
  model.init_seed = seed;
  if (baseline_model) baseline_model->init_seed = seed;
  train.seed = seed;
}

ModelConfig ExperimentConfig::counterpart() const {
  if (baseline_model) return *baseline_model;
  ModelConfig m = model;
  if (model.kind == ModelKind::kSet) {
    m.kind = ModelKind::kNar;
    m.encoder_layers = model.encoder_layers + model.predictor_layers;
    m.predictor_layers = 0;
  } else {
    m.kind = ModelKind::kSet;
    m.encoder_layers = std::max(1, model.encoder_layers - 1);
    m.predictor_layers = 1;
  }
  return m;
}

void ExperimentConfig::validate() const {
  codec.validate();
  train.validate();
  decode.validate();
  data.validate();
  sweep.validate();
  if (output_dir.empty()) fail(ErrorKind::kInvalidArgument, "output_dir is empty");
  if (data.kind == "audio" && codec.kind == "none") {
    fail(ErrorKind::kInvalidArgument, "audio data needs a synthetic or kmeans codec");
  }
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"codec", c.codec},   {"model", c.model}, {"train", c.train},
                     {"decode", c.decode}, {"data", c.data},   {"sweep", c.sweep},
                     {"output_dir", c.output_dir}};
  j["model"].erase("codec");
  if (c.baseline_model) {
    j["baseline_model"] = *c.baseline_model;
    j["baseline_model"].erase("codec");
  }
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  require_known_keys(j, "config",
                     {"codec", "model", "baseline_model", "train", "decode", "data", "sweep",
                      "output_dir"});
  if (j.contains("codec")) c.codec = j.at("codec").get<CodecSection>();
  if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
  if (j.contains("baseline_model")) c.baseline_model = j.at("baseline_model").get<ModelConfig>();
  if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  if (j.contains("decode")) c.decode = j.at("decode").get<BeamConfig>();
  if (j.contains("data")) c.data = j.at("data").get<DataSection>();
  if (j.contains("sweep")) c.sweep = j.at("sweep").get<SweepSection>();
  get_optional(j, "output_dir", c.output_dir);
}

namespace {

std::string resolve_existing(const std::string& p, const std::filesystem::path& base,
                             const std::string& what) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  if (!std::filesystem::exists(path)) {
    fail(ErrorKind::kInvalidArgument, what + " '" + path.string() + "' does not exist");
  }
  return path.string();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedDocument, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c = j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedDocument, std::string("config has a wrong type: ") + e.what());
  }
  DataSection& d = c.data;
  d.channel_path = resolve_existing(d.channel_path, base_dir, "channel file");
  d.train_manifest = resolve_existing(d.train_manifest, base_dir, "manifest");
  d.valid_manifest = resolve_existing(d.valid_manifest, base_dir, "manifest");
  d.test_manifest = resolve_existing(d.test_manifest, base_dir, "manifest");
  if (!d.channel_path.empty() && !d.channel) {
    d.channel = nlohmann::json::parse(read_file(d.channel_path)).get<ChannelSpec>();
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_file(path), path.parent_path());
}

}  // namespace tokse
