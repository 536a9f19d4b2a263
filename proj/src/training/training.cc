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
#include "tokse/training/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "tokse/core/errors.h"
#include "tokse/core/json_util.h"
#include "tokse/decoding/decoding.h"
#include "tokse/nn/ops.h"

namespace tokse {

void TrainConfig::validate() const {
  if (max_epochs < 1) fail(ErrorKind::kInvalidArgument, "max_epochs must be >= 1");
  if (refinement_epochs < 0 || refinement_epochs > max_epochs) {
    fail(ErrorKind::kInvalidArgument, "refinement_epochs must lie in [0, max_epochs]");
  }
  for (double v : {lr_init, lr_anneal_factor, grad_clip_norm, batch_budget_s, adam_eps}) {
    if (!(v > 0.0)) fail(ErrorKind::kInvalidArgument, "rates must be positive");
  }
  if (!(weight_decay >= 0.0)) fail(ErrorKind::kInvalidArgument, "weight_decay < 0");
  if (!(aug_prob >= 0.0 && aug_prob <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "aug_prob must lie in [0, 1]");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail(ErrorKind::kInvalidArgument, "Adam betas must lie in [0, 1)");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"max_epochs", c.max_epochs},
                     {"refinement_epochs", c.refinement_epochs},
                     {"lr_init", c.lr_init},
                     {"weight_decay", c.weight_decay},
                     {"lr_anneal_factor", c.lr_anneal_factor},
                     {"grad_clip_norm", c.grad_clip_norm},
                     {"batch_budget_s", c.batch_budget_s},
                     {"aug_prob", c.aug_prob},
                     {"seed", c.seed},
                     {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},
                     {"adam_eps", c.adam_eps}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  require_known_keys(j, "train",
                     {"max_epochs", "refinement_epochs", "lr_init", "weight_decay",
                      "lr_anneal_factor", "grad_clip_norm", "batch_budget_s",
                      "aug_prob", "seed", "adam_beta1", "adam_beta2", "adam_eps"});
  get_optional(j, "max_epochs", c.max_epochs);
  get_optional(j, "refinement_epochs", c.refinement_epochs);
  get_optional(j, "lr_init", c.lr_init);
  get_optional(j, "weight_decay", c.weight_decay);
  get_optional(j, "lr_anneal_factor", c.lr_anneal_factor);
  get_optional(j, "grad_clip_norm", c.grad_clip_norm);
  get_optional(j, "batch_budget_s", c.batch_budget_s);
  get_optional(j, "aug_prob", c.aug_prob);
  get_optional(j, "seed", c.seed);
  get_optional(j, "adam_beta1", c.adam_beta1);
  get_optional(j, "adam_beta2", c.adam_beta2);
  get_optional(j, "adam_eps", c.adam_eps);
  c.validate();
}

std::string train_mode_name(TrainMode mode) {
  return mode == TrainMode::kTeacherForced ? "teacher_forced" : "free_running";
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "teacher_forced") return TrainMode::kTeacherForced;
  if (name == "free_running") return TrainMode::kFreeRunning;
  fail(ErrorKind::kInvalidArgument, "unknown training mode '" + name + "'");
}

nn::Var cross_entropy_sum(const Logits& logits, const TokenSequence& targets) {
  if (static_cast<int>(logits.size()) != targets.num_codebooks()) {
    fail(ErrorKind::kDimensionMismatch, "one logit matrix per codebook expected");
  }
  nn::Var total;
  for (int k = 0; k < targets.num_codebooks(); ++k) {
    if (logits[k].rows() != targets.num_frames() ||
        logits[k].cols() != targets.spec().codebook_size) {
      fail(ErrorKind::kDimensionMismatch, "logits do not match the target grid");
    }
    nn::Var ce = nn::cross_entropy_sum(logits[k], targets.row(k));
    total = total.defined() ? nn::add(total, ce) : ce;
  }
  return total;
}

double cross_entropy_multicodebook(const std::vector<nn::Matrix>& logits,
                                   const TokenSequence& targets) {
  if (static_cast<int>(logits.size()) != targets.num_codebooks()) {
    fail(ErrorKind::kDimensionMismatch, "one logit matrix per codebook expected");
  }
  const int t_len = targets.num_frames();
  if (t_len == 0) return 0.0;
  double total = 0.0;
  for (int k = 0; k < targets.num_codebooks(); ++k) {
    if (logits[k].rows() != t_len || logits[k].cols() != targets.spec().codebook_size) {
      fail(ErrorKind::kDimensionMismatch, "logits do not match the target grid");
    }
    const nn::Matrix lp = nn::log_softmax_rows(logits[k]);
    for (int t = 0; t < t_len; ++t) total -= lp(t, targets.at(k, t));
  }
  return total / (static_cast<double>(targets.num_codebooks()) * t_len);
}

double lr_on_plateau(std::span<const double> history, double current_lr, double factor) {
  if (history.empty()) {
    fail(ErrorKind::kInvalidArgument, "plateau schedule needs a recorded loss");
  }
  if (history.size() == 1) return current_lr;
  const double best_before =
      *std::min_element(history.begin(), history.end() - 1);
  return history.back() < best_before ? current_lr : current_lr * factor;
}

std::vector<std::vector<std::size_t>> pack_batches(std::span<const double> durations,
                                                   double budget_s, std::uint64_t seed) {
  if (!(budget_s > 0.0)) fail(ErrorKind::kInvalidArgument, "batch budget must be positive");
  std::vector<std::size_t> order(durations.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] > budget_s) {
      fail(ErrorKind::kInvalidArgument,
           "utterance " + std::to_string(i) + " (" + std::to_string(durations[i]) +
               " s) exceeds the batch budget of " + std::to_string(budget_s) + " s");
    }
  }
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_int(rng, static_cast<int>(i))]);
  }
  std::vector<std::vector<std::size_t>> batches;
  double fill = 0.0;
  for (std::size_t idx : order) {
    if (batches.empty() || fill + durations[idx] > budget_s) {
      batches.emplace_back();
      fill = 0.0;
    }
    batches.back().push_back(idx);
    fill += durations[idx];
  }
  return batches;
}

std::vector<std::vector<std::size_t>> pack_batches(const Manifest& manifest,
                                                   double budget_s, std::uint64_t seed) {
  std::vector<double> durations;
  durations.reserve(manifest.size());
  for (const auto& e : manifest.entries) durations.push_back(e.duration_s);
  return pack_batches(durations, budget_s, seed);
}

namespace {

// Which of the two perturbations to apply once augmentation fires.
struct AugmentChoice {
  bool first;
  bool second;
};

AugmentChoice choose(Rng& rng) {
  const double u = uniform01(rng);
  if (u < 1.0 / 3.0) return {true, false};
  if (u < 2.0 / 3.0) return {false, true};
  return {true, true};
}

// Start and length of a random span covering at most 10% of n.
std::pair<int, int> random_span(int n, Rng& rng) {
  const int max_len = std::max(1, n / 10);
  const int len = 1 + uniform_int(rng, max_len);
  const int start = uniform_int(rng, n - len + 1);
  return {start, len};
}

void notch(std::vector<float>& x, int sample_rate, Rng& rng) {
  const double f0 = sample_rate * (0.01 + 0.44 * uniform01(rng));
  const double q = 0.5 + 3.5 * uniform01(rng);
  const double w0 = 2.0 * std::numbers::pi * f0 / sample_rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double cw = std::cos(w0);
  const double a0 = 1.0 + alpha;
  const double b0 = 1.0 / a0, b1 = -2.0 * cw / a0, b2 = 1.0 / a0;
  const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha) / a0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (float& s : x) {
    const double y = b0 * s + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = s;
    y2 = y1;
    y1 = y;
    s = static_cast<float>(std::clamp(y, -1.0, 1.0));
  }
}

}  // namespace

Augmented<WaveformBuffer> augment(const WaveformBuffer& wave, double prob, Rng& rng) {
  Augmented<WaveformBuffer> out{wave, false};
  if (!(uniform01(rng) < prob)) return out;
  out.applied = true;
  const AugmentChoice c = choose(rng);
  if (out.value.samples.empty()) return out;
  if (c.first) notch(out.value.samples, wave.sample_rate_hz, rng);
  if (c.second) {
    auto [start, len] = random_span(static_cast<int>(wave.size()), rng);
    std::fill_n(out.value.samples.begin() + start, len, 0.0f);
  }
  return out;
}

Augmented<TokenSequence> augment_tokens(const TokenSequence& seq, double prob, Rng& rng) {
  Augmented<TokenSequence> out{seq, false};
  if (!(uniform01(rng) < prob)) return out;
  out.applied = true;
  const AugmentChoice c = choose(rng);
  const int t_len = seq.num_frames();
  if (t_len == 0) return out;
  const int k_count = seq.num_codebooks();
  const int vocab = seq.spec().codebook_size;
  std::vector<TokenId> ids = seq.data();
  if (c.first) {
    const int k = uniform_int(rng, k_count);
    auto [start, len] = random_span(t_len, rng);
    for (int t = start; t < start + len; ++t) ids[k * t_len + t] = uniform_int(rng, vocab);
  }
  if (c.second) {
    auto [start, len] = random_span(t_len, rng);
    for (int k = 0; k < k_count; ++k) {
      for (int t = start; t < start + len; ++t) ids[k * t_len + t] = uniform_int(rng, vocab);
    }
  }
  out.value = TokenSequence(seq.spec(), std::move(ids));
  return out;
}

AdamW::AdamW(nn::ParameterSet& params, const TrainConfig& config)
    : params_(params),
      lr_(config.lr_init),
      weight_decay_(config.weight_decay),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_eps) {
  for (const auto& p : params_.items()) {
    m_.push_back(nn::Matrix::Zero(p.var.rows(), p.var.cols()));
    v_.push_back(nn::Matrix::Zero(p.var.rows(), p.var.cols()));
  }
}

void AdamW::step() {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  auto& items = params_.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    nn::Matrix& w = items[i].var.mutable_value();
    w *= 1.0 - lr_ * weight_decay_;
    if (!items[i].var.has_grad()) continue;
    const nn::Matrix& g = items[i].var.grad();
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseAbs2();
    w.array() -= lr_ * (m_[i].array() / c1) /
                 ((v_[i].array() / c2).sqrt() + eps_);
  }
}

void AdamW::export_to(Archive& archive, const std::string& prefix) const {
  archive.metadata[prefix + "steps"] = steps_;
  archive.metadata[prefix + "lr"] = lr_;
  const auto& items = params_.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (const auto* moment : {&m_[i], &v_[i]}) {
      ArchiveArray a;
      a.name = prefix + (moment == &m_[i] ? "m." : "v.") + items[i].name;
      a.shape = {moment->rows(), moment->cols()};
      a.data.assign(moment->data(), moment->data() + moment->size());
      archive.arrays.push_back(std::move(a));
    }
  }
}

void AdamW::import_from(const Archive& archive, const std::string& prefix) {
  steps_ = archive.metadata.at(prefix + "steps").get<std::int64_t>();
  lr_ = archive.metadata.at(prefix + "lr").get<double>();
  const auto& items = params_.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (auto* moment : {&m_[i], &v_[i]}) {
      const auto& a = archive.array(prefix + (moment == &m_[i] ? "m." : "v.") + items[i].name);
      if (static_cast<Eigen::Index>(a.data.size()) != moment->size()) {
        fail(ErrorKind::kMalformedDocument, "optimizer state shape mismatch");
      }
      for (Eigen::Index j = 0; j < moment->size(); ++j) moment->data()[j] = a.data[j];
    }
  }
}

std::vector<TokenId> free_running_history(const SetModel& model,
                                          const TokenSequence& noisy) {
  return shift_with_start(decode_greedy(model, noisy).tokens);
}

namespace {

nn::Var example_loss(const TokenModel& model, const TokenSequence& noisy,
                     const TokenSequence& clean, TrainMode mode,
                     const nn::ForwardContext& ctx) {
  check_same_shape(noisy, clean);
  if (model.kind() == ModelKind::kNar) {
    return cross_entropy_sum(static_cast<const NarModel&>(model).forward(noisy, ctx), clean);
  }
  const auto& set = static_cast<const SetModel&>(model);
  const std::vector<TokenId> history = mode == TrainMode::kTeacherForced
                                           ? shift_with_start(clean)
                                           : free_running_history(set, noisy);
  return cross_entropy_sum(set.forward(noisy, history, ctx), clean);
}

double token_count(const TokenSequence& seq) {
  return static_cast<double>(seq.num_codebooks()) * seq.num_frames();
}

}  // namespace

EpochStats train_epoch(TokenModel& model, const Dataset& data, const EpochPlan& plan,
                       const TrainConfig& config, AdamW& optimizer,
                       const Tokenizer& tokenizer) {
  EpochStats stats;
  double loss_total = 0.0;
  double tokens_total = 0.0;
  double norm_total = 0.0;
  nn::ParameterSet& params = model.params();
  for (const auto& batch : plan.batches) {
    double batch_tokens = 0.0;
    for (std::size_t idx : batch) batch_tokens += token_count(data.at(idx).clean);
    if (batch_tokens == 0.0) continue;
    params.zero_grad();
    for (std::size_t idx : batch) {
      const Example& ex = data[idx];
      const auto u = static_cast<std::uint64_t>(idx);
      const auto e = static_cast<std::uint64_t>(plan.epoch);
      Rng aug_rng(derive_seed(config.seed, {e, u, 1}));
      Rng dropout_rng(derive_seed(config.seed, {e, u, 2}));
      TokenSequence noisy = ex.noisy;
      if (!ex.noisy_wave.empty() && tokenizer) {
        auto aug = augment(ex.noisy_wave, config.aug_prob, aug_rng);
        if (aug.applied) noisy = tokenizer(aug.value);
      } else {
        noisy = augment_tokens(ex.noisy, config.aug_prob, aug_rng).value;
      }
      nn::ForwardContext ctx{true, &dropout_rng};
      nn::Var loss = example_loss(model, noisy, ex.clean, plan.mode, ctx);
      if (!std::isfinite(loss.item())) {
        stats.finite = false;
        return stats;
      }
      loss_total += loss.item();
      tokens_total += token_count(ex.clean);
      nn::scale(loss, 1.0 / batch_tokens).backward();
    }
    const double norm = params.clip_grad_norm(config.grad_clip_norm);
    if (!std::isfinite(norm)) {
      stats.finite = false;
      return stats;
    }
    norm_total += norm;
    stats.max_applied_grad_norm = std::max(stats.max_applied_grad_norm, params.grad_norm());
    optimizer.step();
    ++stats.updates;
  }
  params.zero_grad();
  stats.train_loss = tokens_total > 0.0 ? loss_total / tokens_total : 0.0;
  stats.grad_norm_mean = stats.updates > 0 ? norm_total / stats.updates : 0.0;
  stats.finite = params.all_finite();
  return stats;
}

double evaluate_loss(const TokenModel& model, const Dataset& data, TrainMode mode) {
  nn::NoGradGuard no_grad;
  double loss_total = 0.0;
  double tokens_total = 0.0;
  for (const Example& ex : data) {
    loss_total += example_loss(model, ex.noisy, ex.clean, mode, {}).item();
    tokens_total += token_count(ex.clean);
  }
  return tokens_total > 0.0 ? loss_total / tokens_total : 0.0;
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = nlohmann::ordered_json{{"epoch", r.epoch},
                             {"mode", train_mode_name(r.mode)},
                             {"train_loss", r.train_loss},
                             {"valid_loss", r.valid_loss},
                             {"lr", r.lr},
                             {"grad_norm_mean", r.grad_norm_mean},
                             {"wall_s", r.wall_s}};
}

void from_json(const nlohmann::json& j, EpochRecord& r) {
  r.epoch = j.at("epoch").get<int>();
  r.mode = parse_train_mode(j.at("mode").get<std::string>());
  r.train_loss = j.at("train_loss").get<double>();
  r.valid_loss = j.at("valid_loss").get<double>();
  r.lr = j.at("lr").get<double>();
  r.grad_norm_mean = j.at("grad_norm_mean").get<double>();
  r.wall_s = j.at("wall_s").get<double>();
}

std::string format_log(const std::vector<EpochRecord>& log) {
  std::string out;
  for (const auto& r : log) {
    nlohmann::ordered_json j{{"epoch", r.epoch},
                             {"mode", train_mode_name(r.mode)},
                             {"train_loss", r.train_loss},
                             {"valid_loss", r.valid_loss},
                             {"lr", r.lr},
                             {"grad_norm_mean", r.grad_norm_mean},
                             {"wall_s", r.wall_s}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

TrainMode scheduled_mode(const TrainConfig& config, int epoch) {
  return epoch > config.max_epochs - config.refinement_epochs ? TrainMode::kFreeRunning
                                                              : TrainMode::kTeacherForced;
}

int FitResult::refinement_epochs_run() const {
  return static_cast<int>(std::count_if(log.begin(), log.end(), [](const EpochRecord& r) {
    return r.mode == TrainMode::kFreeRunning;
  }));
}

namespace {

// Mutable bookkeeping of fit(), serialized for resumption.
struct FitState {
  int epochs_completed = 0;
  double lr = 0.0;
  std::vector<double> phase_valid;  // plateau history of the current phase
  int phase_best_epoch = 0;
  double phase_best_valid = 0.0;
  std::vector<nn::Matrix> phase_best;
  std::optional<std::vector<nn::Matrix>> tf_best;
  int tf_best_epoch = 0;
  std::optional<ExposureCheck> exposure;
  std::vector<EpochRecord> log;
};

void export_matrices(const std::vector<nn::Matrix>& values, const nn::ParameterSet& params,
                     const std::string& prefix, Archive& archive) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    ArchiveArray a;
    a.name = prefix + params.items()[i].name;
    a.shape = {values[i].rows(), values[i].cols()};
    a.data.assign(values[i].data(), values[i].data() + values[i].size());
    archive.arrays.push_back(std::move(a));
  }
}

std::vector<nn::Matrix> import_matrices(const Archive& archive, const nn::ParameterSet& params,
                                        const std::string& prefix) {
  std::vector<nn::Matrix> out;
  for (const auto& p : params.items()) {
    const auto& a = archive.array(prefix + p.name);
    nn::Matrix m(p.var.rows(), p.var.cols());
    if (static_cast<Eigen::Index>(a.data.size()) != m.size()) {
      fail(ErrorKind::kMalformedDocument, "resume state shape mismatch");
    }
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = a.data[i];
    out.push_back(std::move(m));
  }
  return out;
}

void save_state(const std::filesystem::path& path, const TokenModel& model,
                const AdamW& optimizer, const FitState& s) {
  Archive archive;
  export_model(model, archive);
  optimizer.export_to(archive, "optim.");
  nlohmann::json st;
  st["epochs_completed"] = s.epochs_completed;
  st["lr"] = s.lr;
  st["phase_valid"] = s.phase_valid;
  st["phase_best_epoch"] = s.phase_best_epoch;
  st["phase_best_valid"] = s.phase_best_valid;
  st["tf_best_epoch"] = s.tf_best_epoch;
  st["has_tf_best"] = s.tf_best.has_value();
  if (s.exposure) {
    st["exposure"] = {{"epoch", s.exposure->epoch},
                      {"teacher_forced_loss", s.exposure->teacher_forced_loss},
                      {"free_running_loss", s.exposure->free_running_loss}};
  }
  st["log"] = s.log;
  archive.metadata["fit_state"] = st;
  export_matrices(s.phase_best, model.params(), "best.", archive);
  if (s.tf_best) export_matrices(*s.tf_best, model.params(), "best_tf.", archive);
  write_archive(archive, path);
}

FitState load_state(const Archive& archive, const TokenModel& model, AdamW& optimizer) {
  FitState s;
  const auto& st = archive.metadata.at("fit_state");
  s.epochs_completed = st.at("epochs_completed").get<int>();
  s.lr = st.at("lr").get<double>();
  s.phase_valid = st.at("phase_valid").get<std::vector<double>>();
  s.phase_best_epoch = st.at("phase_best_epoch").get<int>();
  s.phase_best_valid = st.at("phase_best_valid").get<double>();
  s.tf_best_epoch = st.at("tf_best_epoch").get<int>();
  if (st.contains("exposure")) {
    const auto& e = st.at("exposure");
    s.exposure = ExposureCheck{e.at("epoch").get<int>(),
                               e.at("teacher_forced_loss").get<double>(),
                               e.at("free_running_loss").get<double>()};
  }
  s.log = st.at("log").get<std::vector<EpochRecord>>();
  s.phase_best = import_matrices(archive, model.params(), "best.");
  if (st.at("has_tf_best").get<bool>()) {
    s.tf_best = import_matrices(archive, model.params(), "best_tf.");
  }
  optimizer.import_from(archive, "optim.");
  optimizer.set_lr(s.lr);
  return s;
}

void write_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log) {
  if (!path.empty()) write_file(path, format_log(log));
}

}  // namespace

FitResult fit(TokenModel& model, const Dataset& train, const Dataset& valid,
              const FitOptions& options) {
  const TrainConfig& config = options.config;
  config.validate();
  for (const Dataset* d : {&train, &valid}) {
    for (const Example& ex : *d) {
      if (!ex.noisy.spec().same_grid(model.codec()) ||
          !ex.clean.spec().same_grid(model.codec())) {
        fail(ErrorKind::kSpecMismatch, "example '" + ex.id + "' was tokenized for another grid");
      }
      check_same_shape(ex.noisy, ex.clean);
    }
  }
  if (valid.empty()) fail(ErrorKind::kInsufficientData, "validation set is empty");
  const bool autoregressive = model.kind() == ModelKind::kSet;
  std::vector<double> durations;
  for (const Example& ex : train) {
    durations.push_back(ex.duration_s > 0.0
                            ? ex.duration_s
                            : ex.clean.num_frames() / model.codec().frame_rate_hz);
  }

  AdamW optimizer(model.params(), config);
  FitState s;
  s.lr = config.lr_init;
  if (options.resume != nullptr) s = load_state(*options.resume, model, optimizer);

  FitResult result;
  for (int epoch = s.epochs_completed + 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const TrainMode mode = scheduled_mode(config, epoch);
    const bool phase_start = autoregressive && mode == TrainMode::kFreeRunning &&
                             (epoch == 1 || scheduled_mode(config, epoch - 1) !=
                                                TrainMode::kFreeRunning);
    if (phase_start) {
      if (epoch > 1) {
        s.tf_best = s.phase_best;
        s.tf_best_epoch = s.phase_best_epoch;
      }
      s.exposure = ExposureCheck{epoch, evaluate_loss(model, valid, TrainMode::kTeacherForced),
                                 evaluate_loss(model, valid, TrainMode::kFreeRunning)};
      // Free-running validation losses live on another scale; the plateau
      // and best-checkpoint trackers restart with the phase.
      s.phase_valid.clear();
      s.phase_best_epoch = 0;
    }
    optimizer.set_lr(s.lr);
    EpochPlan plan{epoch, autoregressive ? mode : TrainMode::kTeacherForced,
                   pack_batches(durations, config.batch_budget_s,
                                derive_seed(config.seed, {static_cast<std::uint64_t>(epoch),
                                                          0xba7c4ULL}))};
    const std::vector<nn::Matrix> before = model.params().snapshot();
    EpochStats stats = train_epoch(model, train, plan, config, optimizer, options.tokenizer);
    double valid_loss = stats.finite ? evaluate_loss(model, valid, plan.mode) : NAN;
    if (!stats.finite || !std::isfinite(valid_loss)) {
      model.params().restore(s.phase_best_epoch > 0 ? s.phase_best : before);
      result.diverged = true;
      result.diagnostics = "non-finite loss or parameters in epoch " + std::to_string(epoch) +
                           " (" + train_mode_name(mode) + "); restored parameters from epoch " +
                           std::to_string(s.phase_best_epoch > 0 ? s.phase_best_epoch
                                                                 : epoch - 1);
      break;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mode = mode;
    rec.train_loss = stats.train_loss;
    rec.valid_loss = valid_loss;
    rec.lr = s.lr;
    rec.grad_norm_mean = stats.grad_norm_mean;
    rec.wall_s = options.deterministic
                     ? 0.0
                     : std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                           .count();
    s.log.push_back(rec);
    if (s.phase_best_epoch == 0 || valid_loss < s.phase_best_valid) {
      s.phase_best_epoch = epoch;
      s.phase_best_valid = valid_loss;
      s.phase_best = model.params().snapshot();
    }
    s.phase_valid.push_back(valid_loss);
    s.lr = lr_on_plateau(s.phase_valid, s.lr, config.lr_anneal_factor);
    s.epochs_completed = epoch;
    write_log(options.log_path, s.log);
    if (!options.checkpoint_dir.empty()) {
      save_state(options.checkpoint_dir / "last.ckpt", model, optimizer, s);
    }
  }
  if (!result.diverged && s.phase_best_epoch > 0) model.params().restore(s.phase_best);
  result.log = s.log;
  result.best_epoch = s.phase_best_epoch;
  result.best_valid_loss = s.phase_best_valid;
  result.best_teacher_forced = s.tf_best;
  result.best_teacher_forced_epoch = s.tf_best_epoch;
  result.exposure = s.exposure;
  write_log(options.log_path, s.log);
  return result;
}

nlohmann::json training_summary(const FitResult& result, const TrainConfig& config) {
  nlohmann::json j;
  j["config"] = config;
  j["epochs_completed"] = result.log.empty() ? 0 : result.log.back().epoch;
  j["refinement_epochs_run"] = result.refinement_epochs_run();
  j["best_epoch"] = result.best_epoch;
  j["best_valid_loss"] = result.best_valid_loss;
  j["diverged"] = result.diverged;
  if (result.exposure) {
    j["exposure"] = {{"epoch", result.exposure->epoch},
                     {"teacher_forced_loss", result.exposure->teacher_forced_loss},
                     {"free_running_loss", result.exposure->free_running_loss}};
  }
  return j;
}

}  // namespace tokse
