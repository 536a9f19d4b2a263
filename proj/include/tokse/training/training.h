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
#ifndef TOKSE_TRAINING_TRAINING_H_
#define TOKSE_TRAINING_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokse/core/archive.h"
#include "tokse/core/manifest.h"
#include "tokse/core/random.h"
#include "tokse/core/token_sequence.h"
#include "tokse/core/waveform.h"
#include "tokse/model/model.h"
#include "tokse/nn/parameters.h"

namespace tokse {

struct TrainConfig {
  int max_epochs = 50;
  int refinement_epochs = 5;
  double lr_init = 5e-4;
  double weight_decay = 1e-2;
  double lr_anneal_factor = 0.9;
  double grad_clip_norm = 5.0;
  double batch_budget_s = 90.0;
  double aug_prob = 0.75;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

enum class TrainMode { kTeacherForced, kFreeRunning };

std::string train_mode_name(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

// One training pair. `noisy_wave` is set when the noisy side can be
// re-tokenized after waveform augmentation.
struct Example {
  std::string id;
  TokenSequence noisy;
  TokenSequence clean;
  double duration_s = 0.0;
  WaveformBuffer noisy_wave;
};

using Dataset = std::vector<Example>;
using Tokenizer = std::function<TokenSequence(const WaveformBuffer&)>;

// Sum over codebooks and frames of -log softmax at the targets.
nn::Var cross_entropy_sum(const Logits& logits, const TokenSequence& targets);

// Mean of the above over K * T tokens.
double cross_entropy_multicodebook(const std::vector<nn::Matrix>& logits,
                                   const TokenSequence& targets);

// Unchanged lr when the newest loss beats every earlier one, else
// lr * factor. Needs at least one recorded loss.
double lr_on_plateau(std::span<const double> history, double current_lr,
                     double factor = 0.9);

// Seeded shuffle, then greedy filling: a batch is closed when the next
// utterance would push it past the budget. Throws kInvalidArgument when a
// single utterance exceeds the budget.
std::vector<std::vector<std::size_t>> pack_batches(std::span<const double> durations,
                                                   double budget_s, std::uint64_t seed);
std::vector<std::vector<std::size_t>> pack_batches(const Manifest& manifest,
                                                   double budget_s, std::uint64_t seed);

template <typename T>
struct Augmented {
  T value;
  bool applied = false;
};

// With probability `prob`: a notch at a random centre frequency and width,
// and/or a zeroed chunk of at most 10% of the duration. Length preserved.
Augmented<WaveformBuffer> augment(const WaveformBuffer& wave, double prob, Rng& rng);

// Token-domain counterpart for pipelines without waveforms: one codebook
// randomized over a span, and/or a chunk of frames randomized in every
// codebook. Spans cover at most 10% of the frames.
Augmented<TokenSequence> augment_tokens(const TokenSequence& seq, double prob, Rng& rng);

// Decoupled weight decay Adam.
class AdamW {
 public:
  AdamW(nn::ParameterSet& params, const TrainConfig& config);

  void step();
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::int64_t steps() const { return steps_; }

  void export_to(Archive& archive, const std::string& prefix) const;
  void import_from(const Archive& archive, const std::string& prefix);

 private:
  nn::ParameterSet& params_;
  double lr_;
  double weight_decay_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t steps_ = 0;
  std::vector<nn::Matrix> m_;
  std::vector<nn::Matrix> v_;
};

// Predictor history built from the model's own greedy output (no gradient).
std::vector<TokenId> free_running_history(const SetModel& model,
                                          const TokenSequence& noisy);

struct EpochStats {
  double train_loss = 0.0;  // mean per token
  double grad_norm_mean = 0.0;  // before clipping
  double max_applied_grad_norm = 0.0;  // after clipping
  int updates = 0;
  bool finite = true;
};

struct EpochPlan {
  int epoch = 1;
  TrainMode mode = TrainMode::kTeacherForced;
  std::vector<std::vector<std::size_t>> batches;
};

EpochStats train_epoch(TokenModel& model, const Dataset& data, const EpochPlan& plan,
                       const TrainConfig& config, AdamW& optimizer,
                       const Tokenizer& tokenizer = nullptr);

// Mean per-token loss with dropout off. Free-running mode feeds SET its own
// greedy history; NAR ignores the mode.
double evaluate_loss(const TokenModel& model, const Dataset& data, TrainMode mode);

struct EpochRecord {
  int epoch = 0;
  TrainMode mode = TrainMode::kTeacherForced;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double lr = 0.0;
  double grad_norm_mean = 0.0;
  double wall_s = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

void to_json(nlohmann::json& j, const EpochRecord& r);
void from_json(const nlohmann::json& j, EpochRecord& r);

// Mode of a 1-based epoch under the refinement schedule.
TrainMode scheduled_mode(const TrainConfig& config, int epoch);

struct FitOptions {
  TrainConfig config;
  Tokenizer tokenizer;
  // JSON-lines log, rewritten after every epoch when set.
  std::filesystem::path log_path;
  // Resume state (last.ckpt) is written here after every epoch when set.
  std::filesystem::path checkpoint_dir;
  // Zero wall-clock fields so logs are byte-identical across runs.
  bool deterministic = false;
  // State archive from a previous run; the model must already hold its
  // parameters.
  const Archive* resume = nullptr;
};

// Teacher-forced and free-running validation loss on the parameters frozen
// at the switch to refinement.
struct ExposureCheck {
  int epoch = 0;
  double teacher_forced_loss = 0.0;
  double free_running_loss = 0.0;
};

struct FitResult {
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_valid_loss = 0.0;
  // Best teacher-forced-phase parameters (SET with refinement only).
  std::optional<std::vector<nn::Matrix>> best_teacher_forced;
  int best_teacher_forced_epoch = 0;
  std::optional<ExposureCheck> exposure;
  bool diverged = false;
  std::string diagnostics;

  int refinement_epochs_run() const;
};

// Runs the schedule, keeps the best validation parameters of the final
// phase in `model`, and aborts on non-finite losses with the last good
// parameters restored.
FitResult fit(TokenModel& model, const Dataset& train, const Dataset& valid,
              const FitOptions& options);

// Training metadata stored next to model checkpoints.
nlohmann::json training_summary(const FitResult& result, const TrainConfig& config);

std::string format_log(const std::vector<EpochRecord>& log);

}  // namespace tokse

#endif  // TOKSE_TRAINING_TRAINING_H_
