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

#ifndef TOKSE_CORE_ARCHIVE_H_
#define TOKSE_CORE_ARCHIVE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace tokse {

struct ArchiveArray {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;
};

// Checkpoint container shared by codecs and models.
//
// Layout: "TOKSEARC" magic, u32 version, u32 reserved, u64 header length,
// the JSON header, then every array as little-endian float32 in header
// order. The header is the user metadata with an "arrays" list of
// {"name", "shape"} appended by the writer.
struct Archive {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<ArchiveArray> arrays;

  const ArchiveArray& array(const std::string& name) const;
  bool has_array(const std::string& name) const;
};

inline constexpr std::uint32_t kArchiveVersion = 1;

std::string encode_archive(const Archive& archive);
Archive decode_archive(std::string_view bytes);

void write_archive(const Archive& archive, const std::filesystem::path& path);
Archive read_archive(const std::filesystem::path& path);

// Whole-file helpers; throw kIo on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace tokse

#endif  // TOKSE_CORE_ARCHIVE_H_
