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

#ifndef DETKIT_MUTATE_H_
#define DETKIT_MUTATE_H_

#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "detkit/genome.h"

namespace detkit {

enum class MutationKind {
  kNoop,
  kWiden,
  kNarrow,
  kDeepen,
  kShallow,
  kSwapKind,
  kNeckWidth,
  kNeckDepth,
};

std::string_view to_string(MutationKind kind);
MutationKind mutation_kind_from_string(std::string_view name);

struct Mutation {
  MutationKind kind = MutationKind::kNoop;
  // Backbone stage, or neck level 0..2 for kNeckWidth.
  int target = -1;
  // Signed channel or depth delta. Widen/Narrow take the magnitude.
  int amount = 0;
  // Replacement kind for kSwapKind.
  BlockKind to_kind = BlockKind::kRes;
};

struct MutationSpace {
  std::vector<MutationKind> kinds = {
      MutationKind::kWiden,    MutationKind::kNarrow,    MutationKind::kDeepen,
      MutationKind::kShallow,  MutationKind::kSwapKind,  MutationKind::kNeckWidth,
      MutationKind::kNeckDepth};
  // Restrict swaps to Res on shallow genomes and Csp on deep ones.
  bool scale_rule = true;
  int scale_rule_max_layers = 30;
  int step = 8;
  int min_width = 8;
  int max_width = 1024;
  int max_depth = 8;
  // Empty means every backbone stage.
  std::vector<int> mutable_stages;
  int max_retries = 8;

  void validate() const;
};

// Kinds a stage may be swapped to under `space`. Empty when swaps are
// disallowed for this genome.
std::vector<BlockKind> allowed_block_kinds(const DetectorGenome& genome,
                                           const MutationSpace& space);

// Applies one concrete mutation and repairs channel chaining forward: each
// stage's in_ch follows its producer's out_ch. Returns nullopt when the
// mutation is out of bounds or yields an invalid genome.
std::optional<DetectorGenome> apply_mutation(const DetectorGenome& genome,
                                             const Mutation& mutation,
                                             const MutationSpace& space);

struct MutationOutcome {
  DetectorGenome genome;
  Mutation applied;
  int attempts = 0;
};

// Draws mutations from `rng` until one is feasible. After max_retries
// failures the genome is returned unchanged with applied.kind == kNoop.
MutationOutcome mutate(const DetectorGenome& genome, const MutationSpace& space,
                       std::mt19937_64& rng);

nlohmann::json mutation_space_to_json(const MutationSpace& space);
MutationSpace mutation_space_from_json(const nlohmann::json& doc,
                                       const std::string& path = "mutation");

}  // namespace detkit

#endif  // DETKIT_MUTATE_H_
