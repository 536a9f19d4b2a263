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
#include "tokse/core/manifest.h"

#include <cmath>
#include <unordered_set>

#include "json.hpp"
#include "tokse/core/archive.h"
#include "tokse/core/errors.h"

namespace tokse {

double Manifest::total_duration_s() const {
  double total = 0.0;
  for (const auto& e : entries) total += e.duration_s;
  return total;
}

std::filesystem::path Manifest::resolve(const std::string& locator) const {
  std::filesystem::path p(locator);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

void Manifest::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (e.id.empty()) fail(ErrorKind::kInvalidArgument, "empty utterance id");
    if (!seen.insert(e.id).second) {
      fail(ErrorKind::kDuplicateId, "utterance id '" + e.id + "' repeated");
    }
    if (!(e.duration_s > 0.0) || !std::isfinite(e.duration_s)) {
      fail(ErrorKind::kInvalidArgument,
           "utterance '" + e.id + "' has non-positive duration");
    }
  }
}

Manifest parse_manifest(const std::string& text) {
  Manifest m;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (!doc.is_array()) {
      fail(ErrorKind::kMalformedDocument, "manifest must be a JSON array");
    }
    for (const auto& item : doc) {
      ManifestEntry e;
      e.id = item.at("id").get<std::string>();
      e.noisy = item.at("noisy").get<std::string>();
      e.clean = item.at("clean").get<std::string>();
      e.duration_s = item.at("duration_s").get<double>();
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedDocument, e.what());
  }
  m.validate();
  return m;
}

std::string dump_manifest(const Manifest& manifest) {
  manifest.validate();
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    doc.push_back({{"id", e.id},
                   {"noisy", e.noisy},
                   {"clean", e.clean},
                   {"duration_s", e.duration_s}});
  }
  return doc.dump(1) + "\n";
}

Manifest read_manifest(const std::filesystem::path& path) {
  Manifest m = parse_manifest(read_file(path));
  m.base_dir = path.parent_path();
  return m;
}

void write_manifest(const Manifest& manifest,
                    const std::filesystem::path& path) {
  write_file(path, dump_manifest(manifest));
}

}  // namespace tokse
