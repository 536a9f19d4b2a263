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
#include "tokse/core/token_sequence.h"

#include <cmath>

#include "bytes.h"
#include "json.hpp"
#include "tokse/core/archive.h"
#include "tokse/core/errors.h"

namespace tokse {
namespace {

constexpr char kMagic[8] = {'T', 'O', 'K', 'S', 'E', 'Q', '\0', '\0'};
constexpr std::size_t kPrefixSize = 16;

void check_ids(const CodecSpec& spec, const std::vector<TokenId>& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i] < 0 || data[i] >= spec.codebook_size) {
      fail(ErrorKind::kOutOfRange,
           "token id " + std::to_string(data[i]) + " at flat index " +
               std::to_string(i) + " outside [0, " +
               std::to_string(spec.codebook_size) + ")");
    }
  }
}

}  // namespace

TokenSequence::TokenSequence(CodecSpec spec, int num_frames)
    : spec_(std::move(spec)), num_frames_(num_frames) {
  spec_.validate();
  if (num_frames < 0) fail(ErrorKind::kInvalidArgument, "negative length");
  data_.assign(static_cast<std::size_t>(spec_.num_codebooks) * num_frames, 0);
}

TokenSequence::TokenSequence(CodecSpec spec, std::vector<TokenId> codebook_major)
    : spec_(std::move(spec)), data_(std::move(codebook_major)) {
  spec_.validate();
  if (data_.size() % spec_.num_codebooks != 0) {
    fail(ErrorKind::kRaggedGrid, "grid size not a multiple of K");
  }
  num_frames_ = static_cast<int>(data_.size() / spec_.num_codebooks);
  check_ids(spec_, data_);
}

TokenSequence TokenSequence::from_rows(
    CodecSpec spec, const std::vector<std::vector<TokenId>>& rows) {
  spec.validate();
  if (static_cast<int>(rows.size()) != spec.num_codebooks) {
    fail(ErrorKind::kSpecMismatch, "expected " +
                                       std::to_string(spec.num_codebooks) +
                                       " codebook rows, got " +
                                       std::to_string(rows.size()));
  }
  std::vector<TokenId> flat;
  const std::size_t length = rows.empty() ? 0 : rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != length) {
      fail(ErrorKind::kRaggedGrid, "codebook rows differ in length");
    }
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return TokenSequence(std::move(spec), std::move(flat));
}

TokenSequence TokenSequence::slice(int begin, int count) const {
  if (begin < 0 || count < 0 || begin + count > num_frames_) {
    fail(ErrorKind::kOutOfRange, "slice outside sequence");
  }
  std::vector<TokenId> out;
  out.reserve(static_cast<std::size_t>(count) * spec_.num_codebooks);
  for (int k = 0; k < spec_.num_codebooks; ++k) {
    auto r = row(k);
    out.insert(out.end(), r.begin() + begin, r.begin() + begin + count);
  }
  return TokenSequence(spec_, std::move(out));
}

const TokenSequence& validate_token_sequence(const TokenSequence& seq) {
  seq.spec().validate();
  if (seq.data().size() != static_cast<std::size_t>(seq.num_codebooks()) *
                               seq.num_frames()) {
    fail(ErrorKind::kRaggedGrid, "grid size inconsistent with K x T");
  }
  check_ids(seq.spec(), seq.data());
  return seq;
}

TokenSequence concat_time(const TokenSequence& a, const TokenSequence& b) {
  if (!a.spec().same_grid(b.spec())) {
    fail(ErrorKind::kSpecMismatch, "cannot concatenate different token grids");
  }
  std::vector<TokenId> out;
  out.reserve(a.data().size() + b.data().size());
  for (int k = 0; k < a.num_codebooks(); ++k) {
    auto ra = a.row(k);
    auto rb = b.row(k);
    out.insert(out.end(), ra.begin(), ra.end());
    out.insert(out.end(), rb.begin(), rb.end());
  }
  return TokenSequence(a.spec(), std::move(out));
}

void check_same_shape(const TokenSequence& a, const TokenSequence& b) {
  if (!a.spec().same_grid(b.spec())) {
    fail(ErrorKind::kSpecMismatch, "token grids differ (K, C or frame rate)");
  }
  if (a.num_frames() != b.num_frames()) {
    fail(ErrorKind::kLengthMismatch,
         "sequence lengths differ: " + std::to_string(a.num_frames()) +
             " vs " + std::to_string(b.num_frames()));
  }
}

std::string encode_token_sequence(const TokenSequence& seq) {
  nlohmann::json header = {{"k", seq.num_codebooks()},
                           {"c", seq.spec().codebook_size},
                           {"t", seq.num_frames()},
                           {"frame_rate_hz", seq.spec().frame_rate_hz}};
  const std::string header_text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  out.push_back(static_cast<char>(kTokSeqVersion));
  out.append(3, '\0');
  internal::put_le<std::uint32_t>(out,
                                  static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  for (TokenId id : seq.data()) {
    internal::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id));
  }
  return out;
}

TokenSequence decode_token_sequence(std::string_view bytes,
                                    const CodecSpec* expected) {
  internal::ByteReader reader(bytes);
  std::string_view magic = reader.take(sizeof(kMagic));
  if (magic != std::string_view(kMagic, sizeof(kMagic))) {
    fail(ErrorKind::kMalformedDocument, "not a TOKSEQ container");
  }
  const auto version = reader.get<std::uint8_t>();
  if (version != kTokSeqVersion) {
    fail(ErrorKind::kMalformedDocument,
         "unsupported TOKSEQ version " + std::to_string(version));
  }
  reader.take(3);
  const auto header_len = reader.get<std::uint32_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(reader.take(header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedDocument, std::string("bad header: ") + e.what());
  }
  CodecSpec spec = expected ? *expected : CodecSpec{};
  int t = 0;
  try {
    spec.num_codebooks = header.at("k").get<int>();
    spec.codebook_size = header.at("c").get<int>();
    spec.frame_rate_hz = header.at("frame_rate_hz").get<double>();
    t = header.at("t").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedDocument, std::string("bad header: ") + e.what());
  }
  if (expected && !expected->same_grid(spec)) {
    fail(ErrorKind::kSpecMismatch, "token file grid differs from codec");
  }
  spec.validate();
  if (t < 0) fail(ErrorKind::kMalformedDocument, "negative frame count");
  const std::size_t count = static_cast<std::size_t>(spec.num_codebooks) * t;
  if (reader.remaining() != count * sizeof(std::uint32_t)) {
    fail(ErrorKind::kMalformedDocument, "payload size does not match header");
  }
  std::vector<TokenId> data(count);
  for (auto& id : data) {
    const auto raw = reader.get<std::uint32_t>();
    if (raw >= static_cast<std::uint32_t>(spec.codebook_size)) {
      fail(ErrorKind::kOutOfRange, "stored token id " + std::to_string(raw) +
                                       " >= C");
    }
    id = static_cast<TokenId>(raw);
  }
  return TokenSequence(std::move(spec), std::move(data));
}

void write_token_sequence(const TokenSequence& seq,
                          const std::filesystem::path& path) {
  write_file(path, encode_token_sequence(seq));
}

TokenSequence read_token_sequence(const std::filesystem::path& path,
                                  const CodecSpec* expected) {
  return decode_token_sequence(read_file(path), expected);
}

}  // namespace tokse
