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

#ifndef DETKIT_TOOLS_CLI_H_
#define DETKIT_TOOLS_CLI_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace detkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitInvariant = 4;

struct RunManifest {
  std::string command;
  std::string config_hash;
  uint64_t seed = 0;
  std::string version;
  std::string started_at;
  std::string finished_at;

  // Without timestamps, for embedding in deterministic outputs.
  nlohmann::json stable_json() const;
  nlohmann::json to_json() const;
};

// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

// Sidecar path for an output file.
std::string manifest_path(const std::string& output);

// Runs one invocation. `args` excludes the program name. Returns the exit
// code; nothing is thrown.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace detkit::cli

#endif  // DETKIT_TOOLS_CLI_H_
