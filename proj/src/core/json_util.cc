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
#include "tokse/core/json_util.h"

#include <algorithm>

#include "tokse/core/errors.h"

namespace tokse {

void require_known_keys(const nlohmann::json& j, std::string_view where,
                        std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) {
    fail(ErrorKind::kInvalidArgument, std::string(where) + " must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorKind::kInvalidArgument,
           "unknown key '" + key + "' in " + std::string(where));
    }
  }
}

}  // namespace tokse
