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
#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "tokse/core/archive.h"
#include "tokse/core/codec_spec.h"
#include "tokse/core/errors.h"
#include "tokse/core/json_util.h"
#include "tokse/core/manifest.h"
#include "tokse/core/random.h"
#include "tokse/core/token_sequence.h"
#include "tokse/core/waveform.h"

namespace tokse {
namespace {

namespace fs = std::filesystem;

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

CodecSpec small_spec(int k, int c) {
  CodecSpec s;
  s.num_codebooks = k;
  s.codebook_size = c;
  return s;
}

TokenSequence random_sequence(const CodecSpec& spec, int t, Rng& rng) {
  std::vector<TokenId> ids(static_cast<std::size_t>(spec.num_codebooks) * t);
  for (auto& id : ids) id = uniform_int(rng, spec.codebook_size);
  return TokenSequence(spec, ids);
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tokse_core_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST_CASE("codec spec defaults describe a 3 kbps grid") {
  CodecSpec s;
  CHECK(s.num_codebooks == 4);
  CHECK(s.codebook_size == 1024);
  CHECK(s.start_token() == 1024);
  CHECK(s.bitrate_bps() == doctest::Approx(3000.0));
  CHECK(kind_of([] { small_spec(0, 4).validate(); }) == ErrorKind::kInvalidArgument);
  CHECK(kind_of([] { small_spec(1, 1).validate(); }) == ErrorKind::kInvalidArgument);
  nlohmann::json j = s;
  CHECK(j.get<CodecSpec>() == s);
}

TEST_CASE("validate_token_sequence") {
  CodecSpec spec;
  Rng rng(1);
  SUBCASE("full range accepted") {
    std::vector<TokenId> ids(4 * 50);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<TokenId>(i % 1024);
    ids[3] = 1023;
    TokenSequence seq(spec, ids);
    CHECK(&validate_token_sequence(seq) == &seq);
  }
  SUBCASE("empty grid accepted") {
    TokenSequence seq(spec, 0);
    CHECK(seq.empty());
    validate_token_sequence(seq);
  }
  SUBCASE("start token rejected") {
    std::vector<TokenId> ids(4 * 3, 0);
    ids[5] = 1024;
    CHECK(kind_of([&] { TokenSequence(spec, ids); }) == ErrorKind::kOutOfRange);
    ids[5] = -1;
    CHECK(kind_of([&] { TokenSequence(spec, ids); }) == ErrorKind::kOutOfRange);
  }
  SUBCASE("ragged rows rejected") {
    CHECK(kind_of([&] {
            TokenSequence::from_rows(small_spec(2, 4), {{0, 1, 2}, {0, 1}});
          }) == ErrorKind::kRaggedGrid);
  }
}

TEST_CASE("concat_time") {
  Rng rng(2);
  CodecSpec spec = small_spec(2, 8);
  TokenSequence a = random_sequence(spec, 3, rng);
  TokenSequence b = random_sequence(spec, 5, rng);
  TokenSequence ab = concat_time(a, b);
  CHECK(ab.num_frames() == 8);
  CHECK(ab.slice(0, 3) == a);
  CHECK(ab.slice(3, 5) == b);
  CHECK(concat_time(TokenSequence(spec, 0), b) == b);
  TokenSequence c = random_sequence(small_spec(4, 8), 2, rng);
  CHECK(kind_of([&] { concat_time(a, c); }) == ErrorKind::kSpecMismatch);
}

TEST_CASE("check_same_shape rejects unequal lengths") {
  Rng rng(3);
  CodecSpec spec = small_spec(2, 8);
  CHECK(kind_of([&] {
          check_same_shape(random_sequence(spec, 4, rng), random_sequence(spec, 5, rng));
        }) == ErrorKind::kLengthMismatch);
}

TEST_CASE("TOKSEQ round trip on random grids") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    CodecSpec spec = small_spec(1 + uniform_int(rng, 8), 2 + uniform_int(rng, 2000));
    spec.frame_rate_hz = 12.5 * (1 + uniform_int(rng, 8));
    TokenSequence seq = random_sequence(spec, uniform_int(rng, 40), rng);
    std::string bytes = encode_token_sequence(seq);
    CHECK(bytes.substr(0, 8) == std::string("TOKSEQ\0\0", 8));
    CHECK(static_cast<unsigned char>(bytes[8]) == kTokSeqVersion);
    TokenSequence back = decode_token_sequence(bytes);
    CHECK(back == seq);
    CHECK(back.spec().frame_rate_hz == spec.frame_rate_hz);
  }
}

TEST_CASE("TOKSEQ decoding rejects corrupt input") {
  Rng rng(5);
  TokenSequence seq = random_sequence(small_spec(2, 4), 6, rng);
  std::string bytes = encode_token_sequence(seq);
  CHECK(kind_of([&] { decode_token_sequence(bytes.substr(0, bytes.size() - 1)); }) ==
        ErrorKind::kMalformedDocument);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(kind_of([&] { decode_token_sequence(bad_magic); }) ==
        ErrorKind::kMalformedDocument);
  std::string bad_id = bytes;
  bad_id[bad_id.size() - 4] = 9;  // last id := 9 >= C
  CHECK(kind_of([&] { decode_token_sequence(bad_id); }) == ErrorKind::kOutOfRange);
  CodecSpec other = small_spec(3, 4);
  CHECK(kind_of([&] { decode_token_sequence(bytes, &other); }) ==
        ErrorKind::kSpecMismatch);
}

TEST_CASE("manifest parsing") {
  const std::string doc = R"([
    {"id": "a", "noisy": "n/a.tok", "clean": "c/a.tok", "duration_s": 1.5},
    {"id": "b", "noisy": "n/b.tok", "clean": "c/b.tok", "duration_s": 2.0}])";
  Manifest m = parse_manifest(doc);
  CHECK(m.size() == 2);
  CHECK(m.total_duration_s() == doctest::Approx(3.5));
  const std::string dup = R"([
    {"id": "a", "noisy": "x", "clean": "y", "duration_s": 1},
    {"id": "a", "noisy": "x", "clean": "y", "duration_s": 1}])";
  CHECK(kind_of([&] { parse_manifest(dup); }) == ErrorKind::kDuplicateId);
  CHECK(kind_of([] { parse_manifest("{not json"); }) == ErrorKind::kMalformedDocument);
  CHECK(kind_of([] { parse_manifest(R"([{"id": "a"}])"); }) ==
        ErrorKind::kMalformedDocument);
  CHECK(kind_of([] {
          parse_manifest(R"([{"id":"a","noisy":"x","clean":"y","duration_s":0}])");
        }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("manifest write/read round trip on random manifests") {
  fs::path dir = temp_dir("manifest");
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    Manifest m;
    const int n = uniform_int(rng, 20);
    for (int i = 0; i < n; ++i) {
      ManifestEntry e;
      e.id = "utt_" + std::to_string(trial) + "_" + std::to_string(i) + "é";
      e.noisy = "noisy/" + std::to_string(uniform_int(rng, 1000)) + ".tok";
      e.clean = "clean/" + std::to_string(uniform_int(rng, 1000)) + ".tok";
      e.duration_s = 0.01 + 30.0 * uniform01(rng);
      m.entries.push_back(e);
    }
    write_manifest(m, dir / "m.json");
    Manifest back = read_manifest(dir / "m.json");
    CHECK(back == m);
    CHECK(back.base_dir == dir);
  }
}

TEST_CASE("archive round trip") {
  Archive a;
  a.metadata["kind"] = "test";
  a.arrays.push_back({"w", {2, 3}, {1, 2, 3, 4, 5, 6.5f}});
  a.arrays.push_back({"empty", {0, 4}, {}});
  Archive b = decode_archive(encode_archive(a));
  CHECK(b.metadata["kind"] == "test");
  CHECK(b.array("w").data == a.arrays[0].data);
  CHECK(b.array("w").shape == a.arrays[0].shape);
  CHECK(b.has_array("empty"));
  CHECK_FALSE(b.has_array("missing"));
  CHECK(kind_of([&] { b.array("missing"); }) == ErrorKind::kMalformedDocument);
}

TEST_CASE("wav round trip keeps 16-bit precision") {
  fs::path dir = temp_dir("wav");
  WaveformBuffer w;
  w.sample_rate_hz = 8000;
  for (int i = 0; i < 800; ++i) w.samples.push_back(0.9f * std::sin(0.05f * i));
  w.samples.push_back(1.0f);
  w.samples.push_back(-1.0f);
  write_wav(w, dir / "x.wav");
  WaveformBuffer r = read_wav(dir / "x.wav");
  CHECK(r.sample_rate_hz == 8000);
  REQUIRE(r.size() == w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(std::abs(r.samples[i] - w.samples[i]) <= 1.0 / 32767.0);
  }
  WaveformBuffer bad = w;
  bad.samples[3] = std::nanf("");
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::kNonFinite);
  bad.samples[3] = 1.5f;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::kOutOfRange);
}

TEST_CASE("unknown keys are rejected") {
  nlohmann::json j = {{"a", 1}, {"b", 2}};
  require_known_keys(j, "section", {"a", "b", "c"});
  CHECK(kind_of([&] { require_known_keys(j, "section", {"a"}); }) ==
        ErrorKind::kInvalidArgument);
}

TEST_CASE("derived seeds are stable and distinct") {
  CHECK(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
  CHECK(derive_seed(7, {1, 2}) != derive_seed(7, {2, 1}));
  CHECK(derive_seed(7, {1}) != derive_seed(8, {1}));
}

}  // namespace
}  // namespace tokse
