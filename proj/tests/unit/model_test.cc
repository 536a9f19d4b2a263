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
#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "support/gradcheck.h"
#include "tokse/core/errors.h"
#include "tokse/model/model.h"
#include "tokse/nn/ops.h"

namespace tokse {
namespace {

using nn::Matrix;
using nn::Var;

CodecSpec grid(int k, int c) {
  CodecSpec s;
  s.num_codebooks = k;
  s.codebook_size = c;
  return s;
}

ModelConfig tiny(ModelKind kind, int k = 2, int c = 5) {
  ModelConfig m = kind == ModelKind::kNar ? default_nar_config() : default_set_config();
  m.codec = grid(k, c);
  m.encoder_layers = kind == ModelKind::kNar ? 2 : 1;
  m.num_heads = 2;
  m.model_dim = 8;
  m.ffn_dim = 12;
  m.dropout_p = 0.0;
  m.conv_kernel = 3;
  m.max_rel_pos = 3;
  m.joiner_dim = 6;
  m.init_seed = 7;
  return m;
}

TokenSequence random_tokens(const CodecSpec& spec, int t, Rng& rng) {
  std::vector<TokenId> ids(static_cast<std::size_t>(spec.num_codebooks) * t);
  for (auto& id : ids) id = uniform_int(rng, spec.codebook_size);
  return TokenSequence(spec, ids);
}

Var total_cross_entropy(const Logits& logits, const TokenSequence& target) {
  Var total;
  for (int k = 0; k < target.num_codebooks(); ++k) {
    Var ce = nn::cross_entropy_sum(logits[k], target.row(k));
    total = total.defined() ? nn::add(total, ce) : ce;
  }
  return total;
}

void jitter(nn::ParameterSet& params, Rng& rng) {
  for (auto& p : params.items()) {
    p.var.mutable_value() += nn::normal_matrix(static_cast<int>(p.var.rows()),
                                               static_cast<int>(p.var.cols()), 0.1, rng);
  }
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

TEST_CASE("embed_sum") {
  Rng rng(1);
  SUBCASE("single codebook is a lookup") {
    Matrix table = nn::normal_matrix(6, 3, 1.0, rng);
    TokenSequence seq = random_tokens(grid(1, 6), 9, rng);
    Matrix out = embed_sum(seq, {nn::constant(table)}).value();
    for (int t = 0; t < 9; ++t) CHECK(out.row(t) == table.row(seq.at(0, t)));
  }
  SUBCASE("zero tables give zero features") {
    TokenSequence seq = random_tokens(grid(3, 4), 5, rng);
    std::vector<Var> tables(3, nn::constant(Matrix::Zero(4, 2)));
    CHECK(embed_sum(seq, tables).value().isZero(0.0));
  }
  SUBCASE("two codebooks add") {
    Matrix a = nn::normal_matrix(4, 3, 1.0, rng);
    Matrix b = nn::normal_matrix(4, 3, 1.0, rng);
    TokenSequence seq = random_tokens(grid(2, 4), 7, rng);
    Matrix out = embed_sum(seq, {nn::constant(a), nn::constant(b)}).value();
    for (int t = 0; t < 7; ++t) {
      Matrix expect = a.row(seq.at(0, t)) + b.row(seq.at(1, t));
      CHECK(out.row(t) == expect);
    }
  }
  SUBCASE("history ids beyond the table are rejected") {
    std::vector<TokenId> ids = {0, 4};
    CHECK(kind_of([&] {
            nn::embedding_sum({nn::constant(Matrix::Zero(4, 2))}, ids, 2);
          }) == ErrorKind::kOutOfRange);
  }
}

TEST_CASE("nar forward shapes and normalization") {
  ModelConfig config = tiny(ModelKind::kNar, 4, 1024);
  config.model_dim = 16;
  NarModel model(config);
  Rng rng(2);
  TokenSequence noisy = random_tokens(config.codec, 50, rng);
  Logits logits = model.forward(noisy, {});
  REQUIRE(logits.size() == 4);
  for (const auto& l : logits) {
    CHECK(l.rows() == 50);
    CHECK(l.cols() == 1024);
    CHECK(l.value().allFinite());
    Matrix p = nn::softmax_rows(l.value());
    for (int t = 0; t < 50; ++t) CHECK(std::abs(p.row(t).sum() - 1.0) < 1e-6);
  }
  Logits empty = model.forward(TokenSequence(config.codec, 0), {});
  CHECK(empty.size() == 4);
  CHECK(empty[0].rows() == 0);
  TokenSequence wrong = random_tokens(grid(2, 1024), 3, rng);
  CHECK(kind_of([&] { model.forward(wrong, {}); }) == ErrorKind::kSpecMismatch);
}

TEST_CASE("nar has a full receptive field") {
  NarModel model(tiny(ModelKind::kNar));
  Rng rng(3);
  TokenSequence noisy = random_tokens(model.codec(), 8, rng);
  auto base = logits_values(model.forward(noisy, {}));
  std::vector<TokenId> ids = noisy.data();
  ids[7] = (ids[7] + 1) % 5;  // last frame of codebook 0
  auto moved = logits_values(model.forward(TokenSequence(model.codec(), ids), {}));
  for (int t = 0; t < 8; ++t) CHECK(moved[0].row(t) != base[0].row(t));
}

TEST_CASE("set predictor is causal bit-exactly") {
  ModelConfig config = tiny(ModelKind::kSet, 2, 5);
  config.dropout_p = 0.1;
  SetModel model(config);
  Rng rng(4);
  jitter(model.params(), rng);
  const int t_len = 10;
  TokenSequence noisy = random_tokens(config.codec, t_len, rng);
  TokenSequence clean = random_tokens(config.codec, t_len, rng);
  std::vector<TokenId> hist = shift_with_start(clean);
  auto base = logits_values(model.forward(noisy, hist, {}));
  for (int t = 0; t + 1 < t_len; ++t) {
    std::vector<TokenId> h2 = hist;
    for (int k = 0; k < 2; ++k) {
      for (int u = t + 1; u < t_len; ++u) {
        h2[k * t_len + u] = uniform_int(rng, 6);  // any id in [0, C]
      }
      h2[k * t_len + t + 1] = (hist[k * t_len + t + 1] + 1) % 6;
    }
    auto moved = logits_values(model.forward(noisy, h2, {}));
    for (int k = 0; k < 2; ++k) {
      CHECK(moved[k].topRows(t + 1) == base[k].topRows(t + 1));
      CHECK(moved[k].row(t + 1) != base[k].row(t + 1));
    }
  }
}

TEST_CASE("set forward validates its history") {
  SetModel model(tiny(ModelKind::kSet));
  Rng rng(5);
  TokenSequence noisy = random_tokens(model.codec(), 4, rng);
  std::vector<TokenId> hist = shift_with_start(random_tokens(model.codec(), 4, rng));
  CHECK(hist[0] == 5);
  CHECK(hist[4] == 5);
  std::vector<TokenId> short_hist(hist.begin(), hist.end() - 2);
  CHECK(kind_of([&] { model.forward(noisy, short_hist, {}); }) ==
        ErrorKind::kLengthMismatch);
  std::vector<TokenId> no_start = hist;
  no_start[4] = 0;
  CHECK(kind_of([&] { model.forward(noisy, no_start, {}); }) ==
        ErrorKind::kMissingStartToken);
  std::vector<TokenId> bad = hist;
  bad[2] = 6;
  CHECK(kind_of([&] { model.forward(noisy, bad, {}); }) == ErrorKind::kOutOfRange);
}

TEST_CASE("zeroed output heads give uniform predictions") {
  SetModel model(tiny(ModelKind::kSet, 2, 5));
  for (auto& p : model.params().items()) {
    if (p.name.rfind("heads.", 0) == 0) p.var.mutable_value().setZero();
  }
  Rng rng(6);
  TokenSequence noisy = random_tokens(model.codec(), 6, rng);
  TokenSequence clean = random_tokens(model.codec(), 6, rng);
  Logits logits = model.forward(noisy, shift_with_start(clean), {});
  const double per_token = total_cross_entropy(logits, clean).item() / (2 * 6);
  CHECK(per_token == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("model gradients match central differences") {
  for (ModelKind kind : {ModelKind::kNar, ModelKind::kSet}) {
    for (bool separate : {false, true}) {
      if (kind == ModelKind::kNar && separate) continue;
      CAPTURE(model_kind_name(kind));
      CAPTURE(separate);
      ModelConfig config = tiny(kind);
      config.separate_joiner_proj = separate;
      auto model = make_model(config);
      Rng rng(8);
      jitter(model->params(), rng);
      TokenSequence noisy = random_tokens(config.codec, 5, rng);
      TokenSequence clean = random_tokens(config.codec, 5, rng);
      std::vector<TokenId> hist = shift_with_start(clean);
      auto loss = [&] {
        if (kind == ModelKind::kNar) {
          return total_cross_entropy(static_cast<NarModel&>(*model).forward(noisy, {}),
                                     clean);
        }
        return total_cross_entropy(
            static_cast<SetModel&>(*model).forward(noisy, hist, {}), clean);
      };
      for (const auto& r : testing::check_gradients(model->params().items(), loss)) {
        INFO(r.name);
        CHECK(r.relative_error < 1e-4);
      }
    }
  }
}

TEST_CASE("forward passes are deterministic") {
  Rng rng(9);
  ModelConfig config = tiny(ModelKind::kSet);
  SetModel a(config);
  SetModel b(config);
  TokenSequence noisy = random_tokens(config.codec, 6, rng);
  std::vector<TokenId> hist = shift_with_start(random_tokens(config.codec, 6, rng));
  auto la = logits_values(a.forward(noisy, hist, {}));
  auto la2 = logits_values(a.forward(noisy, hist, {}));
  auto lb = logits_values(b.forward(noisy, hist, {}));
  for (int k = 0; k < 2; ++k) {
    CHECK(la[k] == la2[k]);
    CHECK(la[k] == lb[k]);
  }
}

TEST_CASE("parameter counts") {
  for (ModelKind kind : {ModelKind::kNar, ModelKind::kSet}) {
    for (bool separate : {false, true}) {
      ModelConfig config = tiny(kind, 3, 7);
      config.separate_joiner_proj = separate;
      auto model = make_model(config);
      CHECK(count_parameters(*model) == expected_parameter_count(config));
    }
  }
  SUBCASE("single table") {
    nn::ParameterSet params;
    params.add("table", Matrix::Zero(1024, 256));
    CHECK(params.scalar_count() == 1024 * 256);
  }
  SUBCASE("paper dimensions are within 10 percent") {
    const double nar = static_cast<double>(expected_parameter_count(default_nar_config()));
    const double set = static_cast<double>(expected_parameter_count(default_set_config()));
    CHECK(std::abs(set - nar) / nar < 0.10);
  }
  SUBCASE("joiner is shared by default") {
    ModelConfig shared = tiny(ModelKind::kSet);
    ModelConfig separate = shared;
    separate.separate_joiner_proj = true;
    CHECK(expected_parameter_count(separate) - expected_parameter_count(shared) ==
          8 * 6 + 6);
  }
}

TEST_CASE("checkpoint round trip") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "tokse_model_test";
  fs::create_directories(dir);
  Rng rng(10);
  ModelConfig config = tiny(ModelKind::kSet);
  SetModel model(config);
  jitter(model.params(), rng);
  // Checkpoints hold float32; round the source first so outputs compare exactly.
  for (auto& p : model.params().items()) {
    p.var.mutable_value() = p.var.value().cast<float>().cast<double>();
  }
  save_model(model, dir / "m.ckpt", nlohmann::json{{"epoch", 3}});
  auto loaded = load_model(dir / "m.ckpt");
  REQUIRE(loaded->kind() == ModelKind::kSet);
  CHECK(loaded->config() == config);
  TokenSequence noisy = random_tokens(config.codec, 6, rng);
  std::vector<TokenId> hist = shift_with_start(random_tokens(config.codec, 6, rng));
  auto a = logits_values(model.forward(noisy, hist, {}));
  auto b = logits_values(static_cast<SetModel&>(*loaded).forward(noisy, hist, {}));
  CHECK(a[0] == b[0]);
  CHECK(read_archive(dir / "m.ckpt").metadata["training"]["epoch"] == 3);

  Archive no_version;
  export_model(model, no_version);
  no_version.metadata.erase("version");
  CHECK(kind_of([&] { import_model(no_version); }) == ErrorKind::kMalformedDocument);
}

TEST_CASE("model config json rejects unknown keys") {
  nlohmann::json j = tiny(ModelKind::kSet);
  CHECK(j.get<ModelConfig>() == tiny(ModelKind::kSet));
  j["encoder_layer"] = 3;
  CHECK(kind_of([&] { j.get<ModelConfig>(); }) == ErrorKind::kInvalidArgument);
}

}  // namespace
}  // namespace tokse
