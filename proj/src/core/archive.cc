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
#include "tokse/core/archive.h"

#include <fstream>
#include <sstream>

#include "bytes.h"
#include "tokse/core/errors.h"

namespace tokse {
namespace {

constexpr char kMagic[8] = {'T', 'O', 'K', 'S', 'E', 'A', 'R', 'C'};

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) fail(ErrorKind::kMalformedDocument, "negative array extent");
    n *= d;
  }
  return n;
}

}  // namespace

const ArchiveArray& Archive::array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  fail(ErrorKind::kMalformedDocument, "archive has no array '" + name + "'");
}

bool Archive::has_array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

std::string encode_archive(const Archive& archive) {
  nlohmann::json header = archive.metadata;
  nlohmann::json listing = nlohmann::json::array();
  for (const auto& a : archive.arrays) {
    if (element_count(a.shape) != static_cast<std::int64_t>(a.data.size())) {
      fail(ErrorKind::kInvalidArgument,
           "array '" + a.name + "' data does not match its shape");
    }
    listing.push_back({{"name", a.name}, {"shape", a.shape}});
  }
  header["arrays"] = listing;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  internal::put_le<std::uint32_t>(out, kArchiveVersion);
  internal::put_le<std::uint32_t>(out, 0);
  internal::put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& a : archive.arrays) {
    for (float v : a.data) internal::put_le<float>(out, v);
  }
  return out;
}

Archive decode_archive(std::string_view bytes) {
  internal::ByteReader reader(bytes);
  if (reader.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    fail(ErrorKind::kMalformedDocument, "not a checkpoint archive");
  }
  const auto version = reader.get<std::uint32_t>();
  if (version != kArchiveVersion) {
    fail(ErrorKind::kMalformedDocument,
         "unsupported archive version " + std::to_string(version));
  }
  reader.get<std::uint32_t>();
  const auto header_len = reader.get<std::uint64_t>();
  Archive archive;
  try {
    archive.metadata = nlohmann::json::parse(reader.take(header_len));
    for (const auto& entry : archive.metadata.at("arrays")) {
      ArchiveArray a;
      a.name = entry.at("name").get<std::string>();
      a.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      archive.arrays.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedDocument, std::string("bad header: ") + e.what());
  }
  archive.metadata.erase("arrays");
  for (auto& a : archive.arrays) {
    a.data.resize(static_cast<std::size_t>(element_count(a.shape)));
    for (auto& v : a.data) v = reader.get<float>();
  }
  if (reader.remaining() != 0) {
    fail(ErrorKind::kMalformedDocument, "trailing bytes after arrays");
  }
  return archive;
}

void write_archive(const Archive& archive, const std::filesystem::path& path) {
  write_file(path, encode_archive(archive));
}

Archive read_archive(const std::filesystem::path& path) {
  return decode_archive(read_file(path));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "short write to " + path.string());
}

}  // namespace tokse
