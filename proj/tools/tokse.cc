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
// Command-line entry point: synth-data, train, evaluate, enhance, sweep.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tokse/core/errors.h"
#include "tokse/core/manifest.h"
#include "tokse/experiment/config.h"
#include "tokse/experiment/pipeline.h"

namespace {

using tokse::ExperimentConfig;

constexpr int kValidationExit = 1;
constexpr int kRuntimeExit = 2;

struct CommonFlags {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--output", f.output, "output directory (overrides output_dir)");
  cmd->add_option("--seed", f.seed, "seed for data, codec, model and training");
  cmd->add_flag("--deterministic", f.deterministic,
                "zero wall-clock fields so reruns are byte-identical");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig c =
      f.config.empty() ? ExperimentConfig{} : tokse::load_experiment_config(f.config);
  if (!f.output.empty()) c.output_dir = f.output;
  if (f.seed) c.set_seed(*f.seed);
  c.validate();
  return c;
}

void print(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << "\n"; }

nlohmann::ordered_json fit_json(const tokse::TrainOutcome& t) {
  nlohmann::ordered_json j;
  j["checkpoint"] = t.checkpoint.string();
  j["tf_checkpoint"] = t.tf_checkpoint.empty() ? nlohmann::ordered_json(nullptr)
                                               : nlohmann::ordered_json(t.tf_checkpoint.string());
  j["epochs"] = t.fit.log.size();
  j["best_epoch"] = t.fit.best_epoch;
  j["best_valid_loss"] = t.fit.best_valid_loss;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Token-based speech enhancement experiments"};
  app.require_subcommand(1);

  CommonFlags synth_f, train_f, eval_f, enhance_f, sweep_f;

  CLI::App* synth = app.add_subcommand("synth-data", "write train/valid/test data");
  add_common(synth, synth_f);

  CLI::App* train = app.add_subcommand("train", "train the configured model");
  add_common(train, train_f);
  std::string resume;
  bool counterpart = false;
  train->add_option("--resume", resume, "last.ckpt of an interrupted run")
      ->check(CLI::ExistingFile);
  train->add_flag("--counterpart", counterpart,
                  "train the model of the other kind (SET <-> NAR) instead");

  CLI::App* evaluate = app.add_subcommand("evaluate", "decode the test split and score it");
  add_common(evaluate, eval_f);
  std::string checkpoint, tf_checkpoint, modes;
  evaluate->add_option("--checkpoint", checkpoint, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--tf-checkpoint", tf_checkpoint,
                       "checkpoint for TF and BS (default: --checkpoint)")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--modes", modes, "comma list of TF, BS, BSR, NAR");

  CLI::App* enhance = app.add_subcommand("enhance", "enhance every entry of a manifest");
  add_common(enhance, enhance_f);
  std::string enhance_ckpt, input;
  enhance->add_option("--checkpoint", enhance_ckpt, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  enhance->add_option("--input", input, "manifest of noisy inputs")
      ->required()
      ->check(CLI::ExistingFile);

  CLI::App* sweep = app.add_subcommand("sweep", "train and evaluate along one axis");
  add_common(sweep, sweep_f);
  std::string axis, values;
  sweep->add_option("--axis", axis, "snr or bitrate")->check(CLI::IsMember({"snr", "bitrate"}));
  sweep->add_option("--values", values, "comma list of axis values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationExit;
  }

  try {
    if (*synth) {
      const ExperimentConfig c = resolve(synth_f);
      const auto s = tokse::synth_data(c, c.output_dir);
      print({{"data_dir", tokse::data_dir(c.output_dir).string()},
             {"train", s.train},
             {"valid", s.valid},
             {"test", s.test}});
    } else if (*train) {
      const ExperimentConfig c = resolve(train_f);
      const auto data = tokse::load_data(c, c.output_dir);
      tokse::TrainOptions o{train_f.deterministic, resume};
      print(fit_json(
          tokse::run_train(c, counterpart ? c.counterpart() : c.model, data, c.output_dir, o)));
    } else if (*evaluate) {
      const ExperimentConfig c = resolve(eval_f);
      const auto data = tokse::load_data(c, c.output_dir);
      tokse::EvaluateOptions o;
      o.modes = tokse::parse_modes(modes);
      o.checkpoint = checkpoint;
      o.tf_checkpoint = tf_checkpoint;
      print(tokse::run_evaluate(c, data, c.output_dir, o).summary);
    } else if (*enhance) {
      const ExperimentConfig c = resolve(enhance_f);
      const auto items =
          tokse::run_enhance(c, enhance_ckpt, tokse::read_manifest(input), c.output_dir);
      int failed = 0;
      for (const auto& item : items) {
        if (!item.error.empty()) {
          ++failed;
          std::cerr << "enhance: " << item.id << ": " << item.error << "\n";
        }
      }
      print({{"enhanced", items.size() - failed}, {"failed", failed}});
      if (failed > 0 && failed == static_cast<int>(items.size())) return kRuntimeExit;
    } else if (*sweep) {
      ExperimentConfig c = resolve(sweep_f);
      if (!axis.empty()) c.sweep.axis = axis;
      if (!values.empty()) {
        c.sweep.values.clear();
        std::stringstream ss(values);
        std::string v;
        while (std::getline(ss, v, ',')) {
          try {
            c.sweep.values.push_back(std::stod(v));
          } catch (const std::exception&) {
            tokse::fail(tokse::ErrorKind::kInvalidArgument, "bad sweep value '" + v + "'");
          }
        }
      }
      c.sweep.validate();
      const auto rows = tokse::run_sweep(c, c.output_dir, {sweep_f.deterministic, {}});
      std::cout << tokse::sweep_csv(rows);
    }
  } catch (const tokse::Error& e) {
    std::cerr << "tokse: " << e.what() << "\n";
    return e.is_validation() ? kValidationExit : kRuntimeExit;
  } catch (const std::exception& e) {
    std::cerr << "tokse: " << e.what() << "\n";
    return kRuntimeExit;
  }
  return 0;
}
