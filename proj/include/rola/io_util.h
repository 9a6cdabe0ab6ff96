// Copyright 2026 the rola authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rola {

// JSON document type whose floating-point numbers are 32-bit. Parsing goes
// through strtof and dumping through the shortest float representation, so
// float payloads round-trip bit-exactly.
using FloatJson = nlohmann::basic_json<std::map, std::vector, std::string, bool,
                                       std::int64_t, std::uint64_t, float>;

std::string ReadFile(const std::string& path);

// Writes to a sibling temp file, then renames over `path`.
void WriteFileAtomic(const std::string& path, std::string_view bytes);

}  // namespace rola
