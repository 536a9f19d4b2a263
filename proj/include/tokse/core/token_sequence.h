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

#ifndef TOKSE_CORE_TOKEN_SEQUENCE_H_
#define TOKSE_CORE_TOKEN_SEQUENCE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tokse/core/codec_spec.h"

namespace tokse {

using TokenId = std::int32_t;

// A K x T grid of token ids, stored codebook-major. Every entry lies in
// [0, C); the start token is never stored. Immutable after construction.
class TokenSequence {
 public:
  TokenSequence() = default;

  // All-zero grid of `num_frames` frames.
  TokenSequence(CodecSpec spec, int num_frames);

  // `codebook_major` holds K rows of T ids back to back.
  TokenSequence(CodecSpec spec, std::vector<TokenId> codebook_major);

  // Rows must share one length; throws kRaggedGrid otherwise.
  static TokenSequence from_rows(CodecSpec spec,
                                 const std::vector<std::vector<TokenId>>& rows);

  const CodecSpec& spec() const { return spec_; }
  int num_codebooks() const { return spec_.num_codebooks; }
  int num_frames() const { return num_frames_; }
  bool empty() const { return num_frames_ == 0; }

  TokenId at(int codebook, int frame) const {
    return data_[static_cast<std::size_t>(codebook) * num_frames_ + frame];
  }
  std::span<const TokenId> row(int codebook) const {
    return {data_.data() + static_cast<std::size_t>(codebook) * num_frames_,
            static_cast<std::size_t>(num_frames_)};
  }
  const std::vector<TokenId>& data() const { return data_; }

  // Frames [begin, begin + count).
  TokenSequence slice(int begin, int count) const;

  bool operator==(const TokenSequence& other) const {
    return spec_.same_grid(other.spec_) && num_frames_ == other.num_frames_ &&
           data_ == other.data_;
  }

 private:
  CodecSpec spec_;
  int num_frames_ = 0;
  std::vector<TokenId> data_;
};

// Re-checks every invariant and returns the input unchanged.
const TokenSequence& validate_token_sequence(const TokenSequence& seq);

// Time concatenation; `a` occupies the prefix. Throws kSpecMismatch.
TokenSequence concat_time(const TokenSequence& a, const TokenSequence& b);

// Noisy/clean pairs must agree on grid and length.
void check_same_shape(const TokenSequence& a, const TokenSequence& b);

// Binary container: 16-byte prefix ("TOKSEQ\0\0", version byte, three zero
// bytes, little-endian u32 header length), a JSON header
// {"k","c","t","frame_rate_hz"}, then K rows of T little-endian u32 ids.
inline constexpr std::uint8_t kTokSeqVersion = 1;

std::string encode_token_sequence(const TokenSequence& seq);
TokenSequence decode_token_sequence(std::string_view bytes,
                                    const CodecSpec* expected = nullptr);
void write_token_sequence(const TokenSequence& seq,
                          const std::filesystem::path& path);
TokenSequence read_token_sequence(const std::filesystem::path& path,
                                  const CodecSpec* expected = nullptr);

}  // namespace tokse

#endif  // TOKSE_CORE_TOKEN_SEQUENCE_H_
