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

#include "detkit/mutate.h"

#include <algorithm>
#include <array>
#include <string>

#include "detkit/errors.h"

namespace detkit {
namespace {

constexpr std::array<std::pair<MutationKind, std::string_view>, 8> kNames = {{
    {MutationKind::kNoop, "noop"},
    {MutationKind::kWiden, "widen"},
    {MutationKind::kNarrow, "narrow"},
    {MutationKind::kDeepen, "deepen"},
    {MutationKind::kShallow, "shallow"},
    {MutationKind::kSwapKind, "swap_kind"},
    {MutationKind::kNeckWidth, "neck_width"},
    {MutationKind::kNeckDepth, "neck_depth"},
}};

bool is_searchable_kind(BlockKind kind) {
  return kind == BlockKind::kRes || kind == BlockKind::kCsp ||
         kind == BlockKind::kMob;
}

std::vector<int> candidate_stages(const DetectorGenome& genome,
                                  const MutationSpace& space) {
  std::vector<int> stages;
  const int n = static_cast<int>(genome.backbone.size());
  if (space.mutable_stages.empty()) {
    for (int i = 0; i < n; ++i) stages.push_back(i);
  } else {
    for (int i : space.mutable_stages) {
      if (i >= 0 && i < n) stages.push_back(i);
    }
  }
  return stages;
}

bool stage_allowed(const DetectorGenome& genome, const MutationSpace& space,
                   int stage) {
  const std::vector<int> stages = candidate_stages(genome, space);
  return std::find(stages.begin(), stages.end(), stage) != stages.end();
}

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<size_t> dist(0, items.size() - 1);
  return items[dist(rng)];
}

int pick_sign(std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? -1 : 1;
}

}  // namespace

std::string_view to_string(MutationKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

MutationKind mutation_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  throw InputError("unknown mutation kind '" + std::string(name) + "'");
}

void MutationSpace::validate() const {
  if (kinds.empty()) throw SchemaError("mutation.kinds", "must not be empty");
  if (step <= 0 || step % 8 != 0) {
    throw SchemaError("mutation.step", "must be a positive multiple of 8");
  }
  if (min_width <= 0 || max_width < min_width) {
    throw SchemaError("mutation.max_width", "need 0 < min_width <= max_width");
  }
  if (max_depth < 1) throw SchemaError("mutation.max_depth", "must be >= 1");
  if (max_retries < 1) throw SchemaError("mutation.max_retries", "must be >= 1");
}

std::vector<BlockKind> allowed_block_kinds(const DetectorGenome& genome,
                                           const MutationSpace& space) {
  if (!space.scale_rule) {
    return {BlockKind::kMob, BlockKind::kRes, BlockKind::kCsp};
  }
  if (backbone_layer_count(genome) <= space.scale_rule_max_layers) {
    return {BlockKind::kRes};
  }
  return {BlockKind::kCsp};
}

std::optional<DetectorGenome> apply_mutation(const DetectorGenome& genome,
                                             const Mutation& mutation,
                                             const MutationSpace& space) {
  DetectorGenome g = genome;
  const int n = static_cast<int>(g.backbone.size());
  const bool stage_op = mutation.kind == MutationKind::kWiden ||
                        mutation.kind == MutationKind::kNarrow ||
                        mutation.kind == MutationKind::kDeepen ||
                        mutation.kind == MutationKind::kShallow ||
                        mutation.kind == MutationKind::kSwapKind;
  if (stage_op) {
    if (mutation.target < 0 || mutation.target >= n) return std::nullopt;
    if (!stage_allowed(g, space, mutation.target)) return std::nullopt;
  }

  switch (mutation.kind) {
    case MutationKind::kNoop:
      return g;
    case MutationKind::kWiden:
    case MutationKind::kNarrow: {
      const int delta = mutation.kind == MutationKind::kWiden
                            ? std::abs(mutation.amount)
                            : -std::abs(mutation.amount);
      if (delta == 0 || delta % 8 != 0) return std::nullopt;
      BlockSpec& b = g.backbone[static_cast<size_t>(mutation.target)];
      const int width = b.out_ch + delta;
      if (width < space.min_width || width > space.max_width) return std::nullopt;
      b.out_ch = width;
      break;
    }
    case MutationKind::kDeepen:
    case MutationKind::kShallow: {
      BlockSpec& b = g.backbone[static_cast<size_t>(mutation.target)];
      if (!is_searchable_kind(b.kind)) return std::nullopt;
      const int depth =
          b.depth + (mutation.kind == MutationKind::kDeepen ? 1 : -1);
      if (depth < 1 || depth > space.max_depth) return std::nullopt;
      b.depth = depth;
      break;
    }
    case MutationKind::kSwapKind: {
      BlockSpec& b = g.backbone[static_cast<size_t>(mutation.target)];
      if (!is_searchable_kind(b.kind) || b.kind == mutation.to_kind) {
        return std::nullopt;
      }
      const std::vector<BlockKind> allowed = allowed_block_kinds(genome, space);
      if (std::find(allowed.begin(), allowed.end(), mutation.to_kind) ==
          allowed.end()) {
        return std::nullopt;
      }
      b.kind = mutation.to_kind;
      break;
    }
    case MutationKind::kNeckWidth: {
      if (!g.neck || mutation.target < 0 || mutation.target > 2) {
        return std::nullopt;
      }
      if (mutation.amount == 0 || mutation.amount % 8 != 0) return std::nullopt;
      int& w = g.neck->widths[static_cast<size_t>(mutation.target)];
      const int width = w + mutation.amount;
      if (width < space.min_width || width > space.max_width) return std::nullopt;
      w = width;
      break;
    }
    case MutationKind::kNeckDepth: {
      if (!g.neck || (mutation.amount != 1 && mutation.amount != -1)) {
        return std::nullopt;
      }
      const int depth = g.neck->depth + mutation.amount;
      if (depth < 1 || depth > space.max_depth) return std::nullopt;
      g.neck->depth = depth;
      break;
    }
  }

  // Forward repair: consumers adopt their producer's width.
  for (size_t i = 1; i < g.backbone.size(); ++i) {
    g.backbone[i].in_ch = g.backbone[i - 1].out_ch;
  }
  try {
    validate(g);
  } catch (const Error&) {
    return std::nullopt;
  }
  return g;
}

MutationOutcome mutate(const DetectorGenome& genome, const MutationSpace& space,
                       std::mt19937_64& rng) {
  space.validate();
  const std::vector<int> stages = candidate_stages(genome, space);
  for (int attempt = 1; attempt <= space.max_retries; ++attempt) {
    Mutation m;
    m.kind = pick(space.kinds, rng);
    switch (m.kind) {
      case MutationKind::kNoop:
        break;
      case MutationKind::kWiden:
      case MutationKind::kNarrow:
        if (stages.empty()) continue;
        m.target = pick(stages, rng);
        m.amount = space.step;
        break;
      case MutationKind::kDeepen:
      case MutationKind::kShallow:
        if (stages.empty()) continue;
        m.target = pick(stages, rng);
        break;
      case MutationKind::kSwapKind: {
        if (stages.empty()) continue;
        m.target = pick(stages, rng);
        const std::vector<BlockKind> allowed = allowed_block_kinds(genome, space);
        m.to_kind = pick(allowed, rng);
        break;
      }
      case MutationKind::kNeckWidth:
        m.target = std::uniform_int_distribution<int>(0, 2)(rng);
        m.amount = pick_sign(rng) * space.step;
        break;
      case MutationKind::kNeckDepth:
        m.amount = pick_sign(rng);
        break;
    }
    if (std::optional<DetectorGenome> g = apply_mutation(genome, m, space)) {
      return MutationOutcome{std::move(*g), m, attempt};
    }
  }
  return MutationOutcome{genome, Mutation{}, space.max_retries};
}

nlohmann::json mutation_space_to_json(const MutationSpace& space) {
  nlohmann::json kinds = nlohmann::json::array();
  for (MutationKind k : space.kinds) kinds.push_back(std::string(to_string(k)));
  return nlohmann::json{{"kinds", kinds},
                        {"scale_rule", space.scale_rule},
                        {"scale_rule_max_layers", space.scale_rule_max_layers},
                        {"step", space.step},
                        {"min_width", space.min_width},
                        {"max_width", space.max_width},
                        {"max_depth", space.max_depth},
                        {"mutable_stages", space.mutable_stages},
                        {"max_retries", space.max_retries}};
}

MutationSpace mutation_space_from_json(const nlohmann::json& doc,
                                       const std::string& path) {
  if (!doc.is_object()) throw SchemaError(path, "expected an object");
  MutationSpace s;
  auto get_int = [&](const char* key, int& out) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number_integer()) {
      throw SchemaError(path + "." + key, "expected an integer");
    }
    out = doc[key].get<int>();
  };
  if (doc.contains("kinds")) {
    if (!doc["kinds"].is_array()) {
      throw SchemaError(path + ".kinds", "expected an array");
    }
    s.kinds.clear();
    for (size_t i = 0; i < doc["kinds"].size(); ++i) {
      const nlohmann::json& k = doc["kinds"][i];
      const std::string where = path + ".kinds[" + std::to_string(i) + "]";
      if (!k.is_string()) throw SchemaError(where, "expected a string");
      try {
        s.kinds.push_back(mutation_kind_from_string(k.get<std::string>()));
      } catch (const InputError& e) {
        throw SchemaError(where, e.what());
      }
    }
  }
  if (doc.contains("scale_rule")) {
    if (!doc["scale_rule"].is_boolean()) {
      throw SchemaError(path + ".scale_rule", "expected a boolean");
    }
    s.scale_rule = doc["scale_rule"].get<bool>();
  }
  get_int("scale_rule_max_layers", s.scale_rule_max_layers);
  get_int("step", s.step);
  get_int("min_width", s.min_width);
  get_int("max_width", s.max_width);
  get_int("max_depth", s.max_depth);
  get_int("max_retries", s.max_retries);
  if (doc.contains("mutable_stages")) {
    const nlohmann::json& st = doc["mutable_stages"];
    if (!st.is_array()) throw SchemaError(path + ".mutable_stages", "expected an array");
    for (size_t i = 0; i < st.size(); ++i) {
      if (!st[i].is_number_integer()) {
        throw SchemaError(path + ".mutable_stages[" + std::to_string(i) + "]",
                          "expected an integer");
      }
      s.mutable_stages.push_back(st[i].get<int>());
    }
  }
  s.validate();
  return s;
}

}  // namespace detkit
