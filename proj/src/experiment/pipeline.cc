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
#include "tokse/experiment/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "tokse/core/archive.h"
#include "tokse/core/errors.h"
#include "tokse/core/random.h"
#include "tokse/decoding/decoding.h"

namespace tokse {
namespace {

const char* const kSplits[] = {"train", "valid", "test"};

std::string item_id(const std::string& split, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05d", split.c_str(), i);
  return buf;
}

int split_count(const DataSection& d, int split) {
  return split == 0 ? d.train_count : split == 1 ? d.valid_count : d.test_count;
}

bool is_wav(const std::string& locator) {
  std::string ext = std::filesystem::path(locator).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".wav";
}

SyntheticCodecOptions codec_options(const CodecSection& c) {
  SyntheticCodecOptions o;
  o.num_bands = c.num_bands;
  o.corpus_seconds = c.corpus_seconds;
  o.kmeans_iterations = c.kmeans_iterations;
  return o;
}

std::filesystem::path manifest_path(const ExperimentConfig& config,
                                    const std::filesystem::path& out, int split) {
  if (config.data.kind == "manifest") {
    const std::string& p = split == 0   ? config.data.train_manifest
                           : split == 1 ? config.data.valid_manifest
                                        : config.data.test_manifest;
    return p;
  }
  return data_dir(out) / (std::string(kSplits[split]) + ".json");
}

std::shared_ptr<const Codec> load_experiment_codec(const ExperimentConfig& config,
                                                   const std::filesystem::path& out) {
  if (config.codec.kind == "none") return nullptr;
  const auto path = data_dir(out) / "codec.ckpt";
  std::shared_ptr<const Codec> codec;
  if (std::filesystem::exists(path)) {
    codec = load_codec(path);
  } else {
    codec = train_codec(config.codec.kind, config.codec.spec, config.codec.seed,
                        codec_options(config.codec));
    save_codec(*codec, path);
  }
  if (!codec->spec().same_grid(config.codec.spec)) {
    fail(ErrorKind::kSpecMismatch, "stored codec does not match the codec section");
  }
  return codec;
}

std::unique_ptr<TokenModel> load_checkpoint(const std::filesystem::path& path,
                                            nlohmann::json* training) {
  const Archive archive = read_archive(path);
  if (training != nullptr) *training = archive.metadata.value("training", nlohmann::json());
  return import_model(archive);
}

TokenSequence decode_mode(const TokenModel& model, const std::string& mode,
                          const Example& ex, const BeamConfig& beam) {
  if (mode == "NAR") return decode_nar(static_cast<const NarModel&>(model), ex.noisy);
  const auto& set = static_cast<const SetModel&>(model);
  if (mode == "TF") return decode_teacher_forced(set, ex.noisy, ex.clean).tokens;
  return decode_beam(set, ex.noisy, beam).tokens;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::filesystem::path data_dir(const std::filesystem::path& out) { return out / "data"; }

std::filesystem::path train_dir(const std::filesystem::path& out, ModelKind kind) {
  return out / ("train_" + model_kind_name(kind));
}

std::optional<ChannelSpec> data_channel(const ExperimentConfig& config) {
  const DataSection& d = config.data;
  if (d.kind == "testbed") {
    return ar_testbed_spec(d.snr_db, d.channel_seed, d.num_codebooks, d.codebook_size, d.stay);
  }
  if (d.kind == "channel") {
    if (!d.channel) fail(ErrorKind::kNotConfigured, "data.channel was not loaded");
    return d.channel;
  }
  return std::nullopt;
}

CodecSpec data_grid(const ExperimentConfig& config) {
  if (auto ch = data_channel(config)) return ch->codec;
  if (config.codec.kind == "none") {
    fail(ErrorKind::kNotConfigured, "token manifests need codec.* grid fields");
  }
  return config.codec.spec;
}

SynthSummary synth_data(const ExperimentConfig& config, const std::filesystem::path& out) {
  config.validate();
  const DataSection& d = config.data;
  const auto dir = data_dir(out);
  SynthSummary summary;
  int* counts[] = {&summary.train, &summary.valid, &summary.test};
  if (d.kind == "testbed" || d.kind == "channel") {
    const ChannelSpec channel = *data_channel(config);
    channel.validate();
    write_file(dir / "channel.json", nlohmann::json(channel).dump(2) + "\n");
    const double duration = d.frames / channel.codec.frame_rate_hz;
    for (int s = 0; s < 3; ++s) {
      Rng rng(derive_seed(d.seed, {0xda7a, static_cast<std::uint64_t>(s)}));
      Manifest m;
      for (int i = 0; i < split_count(d, s); ++i) {
        const std::string id = item_id(kSplits[s], i);
        const TokenSequence clean = sample_clean(channel, d.frames, rng);
        const TokenSequence noisy = corrupt(clean, channel, rng);
        const std::string stem = std::string(kSplits[s]) + "/" + id;
        write_token_sequence(noisy, dir / (stem + ".noisy.tokseq"));
        write_token_sequence(clean, dir / (stem + ".clean.tokseq"));
        m.entries.push_back({id, stem + ".noisy.tokseq", stem + ".clean.tokseq", duration});
      }
      write_manifest(m, dir / (std::string(kSplits[s]) + ".json"));
      *counts[s] = static_cast<int>(m.size());
    }
    return summary;
  }
  if (d.kind == "audio") {
    load_experiment_codec(config, out);
    const int sr = config.codec.spec.sample_rate_hz;
    for (int s = 0; s < 3; ++s) {
      Manifest m;
      for (int i = 0; i < split_count(d, s); ++i) {
        const std::string id = item_id(kSplits[s], i);
        const auto seed = derive_seed(d.seed, {0xa0d10, static_cast<std::uint64_t>(s),
                                               static_cast<std::uint64_t>(i)});
        const WaveformBuffer clean = synthetic_speech(d.duration_s, sr, seed);
        const WaveformBuffer noise = synthetic_noise(d.duration_s, sr, seed ^ 0x5eedULL);
        const WaveformBuffer noisy = mix_at_snr(clean, noise, d.snr_db);
        const std::string stem = std::string(kSplits[s]) + "/" + id;
        write_wav(noisy, dir / (stem + ".noisy.wav"));
        write_wav(clean, dir / (stem + ".clean.wav"));
        m.entries.push_back({id, stem + ".noisy.wav", stem + ".clean.wav", clean.duration_s()});
      }
      write_manifest(m, dir / (std::string(kSplits[s]) + ".json"));
      *counts[s] = static_cast<int>(m.size());
    }
    return summary;
  }
  fail(ErrorKind::kInvalidArgument, "manifest data are read as given; nothing to synthesize");
}

Dataset load_split(const Manifest& manifest, const CodecSpec& grid, const Codec* codec) {
  manifest.validate();
  Dataset out;
  out.reserve(manifest.size());
  for (const ManifestEntry& e : manifest.entries) {
    Example ex;
    ex.id = e.id;
    ex.duration_s = e.duration_s;
    auto load = [&](const std::string& locator, WaveformBuffer* keep) {
      const auto path = manifest.resolve(locator);
      if (!is_wav(locator)) return read_token_sequence(path, &grid);
      if (codec == nullptr) {
        fail(ErrorKind::kNotConfigured, "'" + e.id + "' is audio but no codec is configured");
      }
      WaveformBuffer w = read_wav(path);
      TokenSequence seq = codec->tokenize(w);
      if (keep != nullptr) *keep = std::move(w);
      return seq;
    };
    ex.noisy = load(e.noisy, &ex.noisy_wave);
    ex.clean = load(e.clean, nullptr);
    if (!ex.noisy.spec().same_grid(grid) || !ex.clean.spec().same_grid(grid)) {
      fail(ErrorKind::kSpecMismatch, "'" + e.id + "' does not match the data grid");
    }
    check_same_shape(ex.noisy, ex.clean);
    out.push_back(std::move(ex));
  }
  return out;
}

ExperimentData load_data(const ExperimentConfig& config, const std::filesystem::path& out) {
  config.validate();
  ExperimentData data;
  data.channel = data_channel(config);
  const std::filesystem::path sidecar = data_dir(out) / "channel.json";
  if (!data.channel && config.data.kind != "manifest" && std::filesystem::exists(sidecar)) {
    data.channel = nlohmann::json::parse(read_file(sidecar)).get<ChannelSpec>();
  }
  data.codec = load_experiment_codec(config, out);
  const CodecSpec grid = data_grid(config);
  Dataset* splits[] = {&data.train, &data.valid, &data.test};
  for (int s = 0; s < 3; ++s) {
    const auto path = manifest_path(config, out, s);
    if (!std::filesystem::exists(path)) {
      fail(ErrorKind::kIo, "missing manifest " + path.string() + " (run synth-data first)");
    }
    *splits[s] = load_split(read_manifest(path), grid, data.codec.get());
  }
  return data;
}

TrainOutcome run_train(const ExperimentConfig& config, ModelConfig model_config,
                       const ExperimentData& data, const std::filesystem::path& out,
                       const TrainOptions& options) {
  model_config.codec = data_grid(config);
  model_config.validate();
  const auto dir = train_dir(out, model_config.kind);
  std::filesystem::create_directories(dir);

  std::unique_ptr<TokenModel> model;
  std::optional<Archive> resume;
  if (!options.resume.empty()) {
    resume = read_archive(options.resume);
    model = import_model(*resume);
    if (!(model->config() == model_config)) {
      fail(ErrorKind::kSpecMismatch, "resume state was written for another model config");
    }
  } else {
    model = make_model(model_config);
  }

  FitOptions fo;
  fo.config = config.train;
  fo.log_path = dir / "train_log.jsonl";
  fo.checkpoint_dir = dir;
  fo.deterministic = options.deterministic;
  fo.resume = resume ? &*resume : nullptr;
  if (data.codec) {
    std::shared_ptr<const Codec> codec = data.codec;
    fo.tokenizer = [codec](const WaveformBuffer& w) { return codec->tokenize(w); };
  }

  TrainOutcome outcome;
  outcome.fit = fit(*model, data.train, data.valid, fo);
  const nlohmann::json summary = training_summary(outcome.fit, config.train);
  outcome.checkpoint = dir / "model.ckpt";
  save_model(*model, outcome.checkpoint, summary);
  if (outcome.fit.best_teacher_forced) {
    const std::vector<nn::Matrix> final_params = model->params().snapshot();
    model->params().restore(*outcome.fit.best_teacher_forced);
    nlohmann::json tf = summary;
    tf["refinement_epochs_run"] = 0;
    tf["best_epoch"] = outcome.fit.best_teacher_forced_epoch;
    outcome.tf_checkpoint = dir / "model_tf.ckpt";
    save_model(*model, outcome.tf_checkpoint, tf);
    model->params().restore(final_params);
  }
  nlohmann::ordered_json s;
  s["model_kind"] = model_kind_name(model_config.kind);
  s["parameters"] = count_parameters(*model);
  s["training"] = summary;
  write_file(dir / "summary.json", s.dump(2) + "\n");
  if (outcome.fit.diverged) fail(ErrorKind::kNonFinite, outcome.fit.diagnostics);
  return outcome;
}

Ceilings compute_ceilings(const Dataset& data, const ChannelSpec& channel) {
  if (data.empty()) fail(ErrorKind::kInsufficientData, "no utterances to score");
  Ceilings c;
  ProxyTranscriber transcriber;
  for (const Example& ex : data) {
    const TokenSequence map = exact_map(ex.noisy, channel);
    const TokenSequence marg = marginal_decode(ex.noisy, channel);
    c.map_seq_acc += map == ex.clean ? 1.0 : 0.0;
    c.marginal_seq_acc += marg == ex.clean ? 1.0 : 0.0;
    c.map_token_acc += token_accuracy(map, ex.clean).pooled;
    c.marginal_token_acc += token_accuracy(marg, ex.clean).pooled;
    c.map_dwer += dwer(map, ex.clean, transcriber);
    c.marginal_dwer += dwer(marg, ex.clean, transcriber);
  }
  const double n = static_cast<double>(data.size());
  for (double* v : {&c.map_seq_acc, &c.marginal_seq_acc, &c.map_token_acc,
                    &c.marginal_token_acc, &c.map_dwer, &c.marginal_dwer}) {
    *v /= n;
  }
  return c;
}

nlohmann::ordered_json ceilings_json(const Ceilings& c) {
  nlohmann::ordered_json j;
  j["map_seq_acc"] = c.map_seq_acc;
  j["marginal_seq_acc"] = c.marginal_seq_acc;
  j["map_token_acc"] = c.map_token_acc;
  j["marginal_token_acc"] = c.marginal_token_acc;
  j["map_dwer"] = c.map_dwer;
  j["marginal_dwer"] = c.marginal_dwer;
  return j;
}

std::vector<std::string> parse_modes(const std::string& list) {
  std::vector<std::string> modes;
  std::stringstream ss(list);
  std::string m;
  while (std::getline(ss, m, ',')) {
    m.erase(0, m.find_first_not_of(" \t"));
    m.erase(m.find_last_not_of(" \t") + 1);
    if (m.empty()) continue;
    std::transform(m.begin(), m.end(), m.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (m != "TF" && m != "BS" && m != "BSR" && m != "NAR") {
      fail(ErrorKind::kInvalidArgument, "unknown decode mode '" + m + "'");
    }
    if (std::find(modes.begin(), modes.end(), m) == modes.end()) modes.push_back(m);
  }
  return modes;
}

EvaluateOutcome run_evaluate(const ExperimentConfig& config, const ExperimentData& data,
                             const std::filesystem::path& out,
                             const EvaluateOptions& options) {
  if (options.checkpoint.empty()) fail(ErrorKind::kInvalidArgument, "no checkpoint given");
  nlohmann::json training;
  std::unique_ptr<TokenModel> main = load_checkpoint(options.checkpoint, &training);
  const int refined = training.is_object() ? training.value("refinement_epochs_run", 0) : 0;
  std::unique_ptr<TokenModel> tf_model;
  if (!options.tf_checkpoint.empty()) {
    tf_model = load_checkpoint(options.tf_checkpoint, nullptr);
    if (tf_model->kind() != ModelKind::kSet) {
      fail(ErrorKind::kModeMismatch, "the teacher-forced checkpoint is not a SET model");
    }
  }
  const CodecSpec grid = data_grid(config);
  if (!main->codec().same_grid(grid) || (tf_model && !tf_model->codec().same_grid(grid))) {
    fail(ErrorKind::kSpecMismatch, "checkpoint grid does not match the data");
  }

  std::vector<std::string> modes = options.modes;
  if (modes.empty()) {
    if (main->kind() == ModelKind::kNar) {
      modes = {"NAR"};
    } else {
      modes = {"TF", "BS"};
      if (refined > 0) modes.push_back("BSR");
    }
  }
  for (const std::string& m : modes) {
    const bool nar = main->kind() == ModelKind::kNar;
    if ((m == "NAR") != nar) {
      fail(ErrorKind::kModeMismatch, "mode " + m + " cannot decode a " +
                                         model_kind_name(main->kind()) + " checkpoint");
    }
    if (m == "BSR" && refined == 0) {
      fail(ErrorKind::kModeMismatch, "BSR needs a checkpoint trained with refinement epochs");
    }
  }

  ProxyTranscriber transcriber;
  ProxyEmbedder embedder(grid, 64, 0);
  MetricSuite suite{&transcriber, &embedder, nullptr, nullptr};
  EvaluateOutcome outcome;
  for (const std::string& m : modes) {
    const TokenModel& model =
        (m == "TF" || m == "BS") && tf_model ? *tf_model : *main;
    for (const Example& ex : data.test) {
      outcome.report.add(
          evaluate_utterance(ex.id, m, decode_mode(model, m, ex, config.decode), ex.clean, suite));
    }
  }
  if (data.channel) {
    try {
      outcome.ceilings = compute_ceilings(data.test, *data.channel);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kStateSpaceTooLarge) throw;
    }
  }

  nlohmann::ordered_json summary;
  summary["checkpoint_kind"] = model_kind_name(main->kind());
  summary["test_utterances"] = data.test.size();
  nlohmann::ordered_json per_mode;
  for (const auto& [mode, agg] : outcome.report.aggregates()) {
    per_mode[mode] = {{"count", agg.count},
                      {"token_acc", agg.token_acc},
                      {"seq_acc", agg.exact_match},
                      {"dwer", agg.dwer},
                      {"cossim", agg.cossim}};
  }
  summary["modes"] = per_mode;
  summary["ceilings"] = outcome.ceilings ? ceilings_json(*outcome.ceilings)
                                         : nlohmann::ordered_json(nullptr);
  outcome.summary = summary;

  const auto dir = out / options.name;
  write_file(dir / "report.json", outcome.report.to_json().dump(2) + "\n");
  write_file(dir / "report.csv", outcome.report.to_csv());
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  return outcome;
}

std::vector<EnhanceItem> run_enhance(const ExperimentConfig& config,
                                     const std::filesystem::path& checkpoint,
                                     const Manifest& input, const std::filesystem::path& out) {
  input.validate();
  const std::unique_ptr<TokenModel> model = load_checkpoint(checkpoint, nullptr);
  const std::shared_ptr<const Codec> codec = load_experiment_codec(config, out);
  const CodecSpec grid = model->codec();
  const auto dir = out / "enhanced";
  std::vector<EnhanceItem> items;
  nlohmann::ordered_json index = nlohmann::ordered_json::array();
  for (const ManifestEntry& e : input.entries) {
    EnhanceItem item{e.id, "", ""};
    try {
      Example ex;
      const auto path = input.resolve(e.noisy);
      if (is_wav(e.noisy)) {
        if (!codec) fail(ErrorKind::kNotConfigured, "audio input needs a codec");
        ex.noisy = codec->tokenize(read_wav(path));
      } else {
        ex.noisy = read_token_sequence(path, &grid);
      }
      if (!ex.noisy.spec().same_grid(grid)) {
        fail(ErrorKind::kSpecMismatch, "input grid does not match the checkpoint");
      }
      const std::string mode = model->kind() == ModelKind::kNar ? "NAR" : "BS";
      const TokenSequence enhanced = decode_mode(*model, mode, ex, config.decode);
      write_token_sequence(enhanced, dir / (e.id + ".tokseq"));
      item.output = e.id + ".tokseq";
      if (codec) {
        write_wav(codec->detokenize(enhanced), dir / (e.id + ".wav"));
        item.output = e.id + ".wav";
      }
    } catch (const std::exception& ex) {
      item.error = ex.what();
    }
    index.push_back({{"id", item.id},
                     {"output", item.output.empty() ? nlohmann::ordered_json(nullptr)
                                                    : nlohmann::ordered_json(item.output)},
                     {"error", item.error.empty() ? nlohmann::ordered_json(nullptr)
                                                  : nlohmann::ordered_json(item.error)}});
    items.push_back(std::move(item));
  }
  write_file(dir / "index.json", index.dump(2) + "\n");
  return items;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "axis,axis_value,model_kind,mode,token_acc,seq_acc,dwer,cossim,map_seq_acc,"
      "marginal_seq_acc,map_token_acc,marginal_token_acc,status\n";
  auto cell = [](const std::optional<double>& v) { return v ? format_number(*v) : ""; };
  for (const SweepRow& r : rows) {
    const auto& m = r.metrics;
    const auto& c = r.ceilings;
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out += r.axis + "," + format_number(r.axis_value) + "," + r.model_kind + "," + r.mode + "," +
           cell(m ? std::optional(m->token_acc) : std::nullopt) + "," +
           cell(m ? std::optional(m->exact_match) : std::nullopt) + "," +
           cell(m ? std::optional(m->dwer) : std::nullopt) + "," +
           cell(m ? std::optional(m->cossim) : std::nullopt) + "," +
           cell(c ? std::optional(c->map_seq_acc) : std::nullopt) + "," +
           cell(c ? std::optional(c->marginal_seq_acc) : std::nullopt) + "," +
           cell(c ? std::optional(c->map_token_acc) : std::nullopt) + "," +
           cell(c ? std::optional(c->marginal_token_acc) : std::nullopt) + "," + status + "\n";
  }
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::filesystem::path& out,
                                const TrainOptions& options) {
  config.validate();
  const std::string& axis = config.sweep.axis;
  std::vector<SweepRow> rows;
  for (double value : config.sweep.values) {
    ExperimentConfig point = config;
    if (axis == "snr") {
      point.data.snr_db = value;
    } else {
      const int k = static_cast<int>(value);
      point.data.num_codebooks = k;
      point.codec.spec.num_codebooks = k;
    }
    const auto dir = out / "sweep" / (axis + "_" + format_number(value));
    std::vector<ModelConfig> models{point.model, point.counterpart()};
    try {
      if (point.data.kind == "manifest") {
        fail(ErrorKind::kInvalidArgument, "sweeps need synthesized data");
      }
      if (axis == "snr" && point.data.kind == "channel") {
        fail(ErrorKind::kInvalidArgument, "an explicit channel has a fixed noise level");
      }
      synth_data(point, dir);
      const ExperimentData data = load_data(point, dir);
      for (const ModelConfig& mc : models) {
        const std::string kind = model_kind_name(mc.kind);
        std::vector<std::string> modes;
        if (mc.kind == ModelKind::kNar) {
          modes = {"NAR"};
        } else {
          modes = {"BS"};
          if (point.train.refinement_epochs > 0) modes.push_back("BSR");
        }
        try {
          const TrainOutcome trained = run_train(point, mc, data, dir, options);
          EvaluateOptions eo;
          eo.checkpoint = trained.checkpoint;
          eo.tf_checkpoint = trained.tf_checkpoint;
          eo.modes = modes;
          eo.name = "eval_" + kind;
          const EvaluateOutcome ev = run_evaluate(point, data, dir, eo);
          const auto aggs = ev.report.aggregates();
          for (const std::string& m : modes) {
            rows.push_back({axis, value, kind, m, aggs.at(m), ev.ceilings, "ok"});
          }
        } catch (const std::exception& e) {
          for (const std::string& m : modes) {
            rows.push_back({axis, value, kind, m, std::nullopt, std::nullopt,
                            std::string("failed: ") + e.what()});
          }
        }
      }
    } catch (const std::exception& e) {
      for (const ModelConfig& mc : models) {
        rows.push_back({axis, value, model_kind_name(mc.kind), "", std::nullopt, std::nullopt,
                        std::string("failed: ") + e.what()});
      }
    }
  }

  const auto dir = out / "sweep";
  write_file(dir / "sweep.csv", sweep_csv(rows));
  std::map<std::string, ChartSeries> acc, err;
  for (const SweepRow& r : rows) {
    if (!r.metrics) continue;
    const std::string name = r.model_kind + " " + r.mode;
    for (auto* chart : {&acc, &err}) (*chart)[name].name = name;
    acc[name].x.push_back(r.axis_value);
    acc[name].y.push_back(r.metrics->token_acc);
    err[name].x.push_back(r.axis_value);
    err[name].y.push_back(r.metrics->dwer);
  }
  auto values = [](const std::map<std::string, ChartSeries>& m) {
    std::vector<ChartSeries> v;
    for (const auto& [name, s] : m) v.push_back(s);
    return v;
  };
  const std::string x_label = axis == "snr" ? "SNR (dB)" : "codebooks K";
  write_file(dir / "token_acc.svg",
             line_chart_svg("Token accuracy", x_label, "token accuracy", values(acc)));
  write_file(dir / "dwer.svg", line_chart_svg("Proxy dWER", x_label, "dWER", values(err)));
  return rows;
}

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<ChartSeries>& series) {
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                        "#ff7f0e", "#9467bd", "#8c564b"};
  const double w = 640, h = 400, left = 70, right = 170, top = 40, bottom = 60;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 1, x1 += 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
  auto py = [&](double y) { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right
    << "\" y2=\"" << h - bottom << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
    << h - bottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << px(xv) << "\" y=\"" << h - bottom + 16
      << "\" text-anchor=\"middle\">" << fixed(xv, 2) << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
      << fixed(yv, 3) << "</text>\n";
  }
  o << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 18
    << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << (top + h - bottom) / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kColors[i % 6];
    std::vector<std::size_t> order(s.x.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j : order) o << fixed(px(s.x[j]), 1) << "," << fixed(py(s.y[j]), 1) << " ";
    o << "\"/>\n";
    for (std::size_t j : order) {
      o << "<circle cx=\"" << fixed(px(s.x[j]), 1) << "\" cy=\"" << fixed(py(s.y[j]), 1)
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 10 + 18.0 * i;
    o << "<line x1=\"" << w - right + 12 << "\" y1=\"" << ly << "\" x2=\"" << w - right + 32
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << w - right + 38 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace tokse
