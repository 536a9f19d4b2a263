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

#ifndef TOKSE_CORE_MANIFEST_H_
#define TOKSE_CORE_MANIFEST_H_

#include <filesystem>
#include <string>
#include <vector>

namespace tokse {

struct ManifestEntry {
  std::string id;
  std::string noisy;  // locator, relative paths resolve against the manifest
  std::string clean;
  double duration_s = 0.0;

  bool operator==(const ManifestEntry&) const = default;
};

// A list of utterances with unique ids and positive durations.
struct Manifest {
  std::vector<ManifestEntry> entries;
  // Directory relative locators are resolved against; empty means cwd.
  std::filesystem::path base_dir;

  std::size_t size() const { return entries.size(); }
  double total_duration_s() const;

  std::filesystem::path resolve(const std::string& locator) const;

  // Throws kDuplicateId / kInvalidArgument.
  void validate() const;

  bool operator==(const Manifest& other) const {
    return entries == other.entries;
  }
};

// JSON array of {"id", "noisy", "clean", "duration_s"} objects.
Manifest parse_manifest(const std::string& text);
std::string dump_manifest(const Manifest& manifest);

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest,
                    const std::filesystem::path& path);

}  // namespace tokse

#endif  // TOKSE_CORE_MANIFEST_H_
