// Copyright 2026 The detkit Authors
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

#ifndef DETKIT_GENOME_JSON_H_
#define DETKIT_GENOME_JSON_H_

#include <string>
#include <string_view>

#include "json.hpp"

#include "detkit/genome.h"

namespace detkit {

inline constexpr int kGenomeSchemaVersion = 1;

nlohmann::json genome_to_json(const DetectorGenome& genome);
// Decodes and validates. Errors are SchemaError naming the field path.
DetectorGenome genome_from_json(const nlohmann::json& doc);

std::string genome_to_json_text(const DetectorGenome& genome);
DetectorGenome genome_from_json_text(std::string_view text);

DetectorGenome load_genome_file(const std::string& path);

}  // namespace detkit

#endif  // DETKIT_GENOME_JSON_H_
