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
#ifndef TOKSE_EXPERIMENT_PIPELINE_H_
#define TOKSE_EXPERIMENT_PIPELINE_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokse/channel_lab/channel.h"
#include "tokse/codec/codec.h"
#include "tokse/experiment/config.h"
#include "tokse/metrics/metrics.h"
#include "tokse/model/model.h"
#include "tokse/training/training.h"

namespace tokse {

// Output layout under an experiment directory:
//   data/       manifests, token files or WAVs, channel.json, codec.ckpt
//   train_<kind>/  model.ckpt, model_tf.ckpt, train_log.jsonl, summary.json
//   eval/       report.json, report.csv, summary.json
//   enhanced/   one TOKSEQ (and WAV with a codec) per input entry
//   sweep/      sweep.csv, token_acc.svg, dwer.svg, one directory per point
std::filesystem::path data_dir(const std::filesystem::path& out);
std::filesystem::path train_dir(const std::filesystem::path& out, ModelKind kind);

// Token grid of the configured data.
CodecSpec data_grid(const ExperimentConfig& config);

// Source/channel model of the configured data, when there is one.
std::optional<ChannelSpec> data_channel(const ExperimentConfig& config);

struct SynthSummary {
  int train = 0;
  int valid = 0;
  int test = 0;
};

// Writes data/{train,valid,test}.json plus the files they point to.
SynthSummary synth_data(const ExperimentConfig& config, const std::filesystem::path& out);

struct ExperimentData {
  Dataset train;
  Dataset valid;
  Dataset test;
  std::optional<ChannelSpec> channel;
  std::shared_ptr<const Codec> codec;
};

// Reads the configured manifests (or those under data/). WAV locators are
// tokenized with the codec and keep the noisy waveform for augmentation.
ExperimentData load_data(const ExperimentConfig& config, const std::filesystem::path& out);
Dataset load_split(const Manifest& manifest, const CodecSpec& grid, const Codec* codec);

struct TrainOptions {
  bool deterministic = false;
  std::filesystem::path resume;  // last.ckpt of an earlier run
};

struct TrainOutcome {
  FitResult fit;
  std::filesystem::path checkpoint;
  std::filesystem::path tf_checkpoint;  // empty without refinement
};

// Trains `model` (its grid is replaced by the data grid) on loaded data.
TrainOutcome run_train(const ExperimentConfig& config, ModelConfig model,
                       const ExperimentData& data, const std::filesystem::path& out,
                       const TrainOptions& options = {});

struct EvaluateOptions {
  std::vector<std::string> modes;  // empty: every mode the checkpoint supports
  std::filesystem::path checkpoint;
  std::filesystem::path tf_checkpoint;  // TF and BS; defaults to `checkpoint`
  std::string name = "eval";            // output subdirectory
};

// Decoding accuracy of the exact channel oracles on one split.
struct Ceilings {
  double map_seq_acc = 0.0;
  double marginal_seq_acc = 0.0;
  double map_token_acc = 0.0;
  double marginal_token_acc = 0.0;
  double map_dwer = 0.0;
  double marginal_dwer = 0.0;
};

Ceilings compute_ceilings(const Dataset& data, const ChannelSpec& channel);
nlohmann::ordered_json ceilings_json(const Ceilings& c);

struct EvaluateOutcome {
  EvalReport report;
  std::optional<Ceilings> ceilings;
  nlohmann::ordered_json summary;
};

std::vector<std::string> parse_modes(const std::string& list);

// Decodes the test split in every requested mode. Throws kModeMismatch for
// modes the checkpoint cannot serve.
EvaluateOutcome run_evaluate(const ExperimentConfig& config, const ExperimentData& data,
                             const std::filesystem::path& out,
                             const EvaluateOptions& options);

struct EnhanceItem {
  std::string id;
  std::string output;  // empty on failure
  std::string error;
};

// One output per manifest entry; failures are recorded and skipped.
std::vector<EnhanceItem> run_enhance(const ExperimentConfig& config,
                                     const std::filesystem::path& checkpoint,
                                     const Manifest& input, const std::filesystem::path& out);

struct SweepRow {
  std::string axis;
  double axis_value = 0.0;
  std::string model_kind;
  std::string mode;
  std::optional<ModeAggregate> metrics;
  std::optional<Ceilings> ceilings;
  std::string status = "ok";
};

// Trains and evaluates the configured model and its counterpart at every
// axis value. Writes sweep.csv and charts under sweep/.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::filesystem::path& out,
                                const TrainOptions& options = {});
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Static SVG line chart.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<ChartSeries>& series);

}  // namespace tokse

#endif  // TOKSE_EXPERIMENT_PIPELINE_H_
