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
#ifndef TOKSE_CORE_JSON_UTIL_H_
#define TOKSE_CORE_JSON_UTIL_H_

#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"

namespace tokse {

// Throws kInvalidArgument if `j` is not an object or carries a key outside
// `allowed`. `where` names the section in the message.
void require_known_keys(const nlohmann::json& j, std::string_view where,
                        std::initializer_list<std::string_view> allowed);

// Reads j[key] into out when present.
template <typename T>
void get_optional(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace tokse

#endif  // TOKSE_CORE_JSON_UTIL_H_
