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

#include <random>

#include <gtest/gtest.h>

#include "detkit/errors.h"
#include "detkit/mutate.h"

namespace detkit {
namespace {

DetectorGenome deep_genome() {
  DetectorGenome g = reconstructed_s_genome();
  g.backbone[2].depth = 8;
  g.backbone[3].depth = 8;
  return g;
}

TEST(Mutate, NoopPathLeavesGenome) {
  MutationSpace space;
  space.kinds = {MutationKind::kNoop};
  std::mt19937_64 rng(1);
  const DetectorGenome g = reconstructed_s_genome();
  const MutationOutcome m = mutate(g, space, rng);
  EXPECT_EQ(m.genome, g);
  EXPECT_EQ(m.applied.kind, MutationKind::kNoop);
}

// Structural diff: widening stage 3 by 16 touches exactly its out_ch and
// the next stage's in_ch.
TEST(Mutate, WidenChangesOnlyStageAndConsumer) {
  const DetectorGenome g = reconstructed_s_genome();
  const auto w = apply_mutation(g, Mutation{MutationKind::kWiden, 3, 16}, MutationSpace{});
  ASSERT_TRUE(w.has_value());
  DetectorGenome expected = g;
  expected.backbone[3].out_ch += 16;
  expected.backbone[4].in_ch += 16;
  EXPECT_EQ(*w, expected);
}

TEST(Mutate, WidthBoundsAndQuantization) {
  const DetectorGenome g = tiny_search_genome();
  MutationSpace space;
  space.max_width = 64;
  EXPECT_FALSE(apply_mutation(g, Mutation{MutationKind::kWiden, 4, 8}, space));
  EXPECT_FALSE(apply_mutation(g, Mutation{MutationKind::kWiden, 2, 4}, space));
  space.min_width = 16;
  EXPECT_FALSE(apply_mutation(g, Mutation{MutationKind::kNarrow, 1, 8}, space));
  const auto n = apply_mutation(g, Mutation{MutationKind::kNarrow, 2, 8}, space);
  ASSERT_TRUE(n);
  EXPECT_EQ(n->backbone[2].out_ch, 24);
  EXPECT_EQ(n->backbone[3].in_ch, 24);
}

TEST(Mutate, DepthOnlyOnSearchableKinds) {
  const DetectorGenome g = reconstructed_s_genome();
  EXPECT_FALSE(apply_mutation(g, Mutation{MutationKind::kDeepen, 0}, MutationSpace{}));
  EXPECT_FALSE(apply_mutation(g, Mutation{MutationKind::kDeepen, 6}, MutationSpace{}));
  EXPECT_FALSE(apply_mutation(g, Mutation{MutationKind::kShallow, 1}, MutationSpace{}));
  const auto d = apply_mutation(g, Mutation{MutationKind::kShallow, 3}, MutationSpace{});
  ASSERT_TRUE(d);
  EXPECT_EQ(d->backbone[3].depth, 3);
}

TEST(Mutate, MutableStagesRestrictTargets) {
  MutationSpace space;
  space.mutable_stages = {2};
  const DetectorGenome g = tiny_search_genome();
  EXPECT_FALSE(apply_mutation(g, Mutation{MutationKind::kWiden, 3, 8}, space));
  EXPECT_TRUE(apply_mutation(g, Mutation{MutationKind::kWiden, 2, 8}, space));
}

TEST(Mutate, ScaleRuleSmallModelsUseRes) {
  MutationSpace space;
  space.kinds = {MutationKind::kSwapKind};
  DetectorGenome g = tiny_search_genome();
  g.backbone[2].kind = BlockKind::kCsp;
  ASSERT_EQ(allowed_block_kinds(g, space), std::vector<BlockKind>{BlockKind::kRes});
  std::mt19937_64 rng(2);
  const MutationOutcome m = mutate(g, space, rng);
  for (const BlockSpec& b : m.genome.backbone) EXPECT_NE(b.kind, BlockKind::kCsp);
}

TEST(Mutate, ScaleRuleDeepModelsUseCsp) {
  MutationSpace space;
  space.kinds = {MutationKind::kSwapKind};
  DetectorGenome g = deep_genome();
  ASSERT_GT(backbone_layer_count(g), space.scale_rule_max_layers);
  ASSERT_EQ(allowed_block_kinds(g, space), std::vector<BlockKind>{BlockKind::kCsp});
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const MutationOutcome m = mutate(g, space, rng);
    for (size_t s = 0; s < g.backbone.size(); ++s) {
      if (m.genome.backbone[s].kind != g.backbone[s].kind) {
        EXPECT_EQ(m.genome.backbone[s].kind, BlockKind::kCsp);
      }
    }
    g = m.genome;
  }
}

TEST(Mutate, WithoutScaleRuleAllSearchKindsAllowed) {
  MutationSpace space;
  space.scale_rule = false;
  EXPECT_EQ(allowed_block_kinds(tiny_search_genome(), space).size(), 3u);
  const auto m = apply_mutation(tiny_search_genome(),
                                Mutation{MutationKind::kSwapKind, 2, 0, BlockKind::kMob}, space);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->backbone[2].kind, BlockKind::kMob);
  // Stems never swap.
  EXPECT_FALSE(apply_mutation(tiny_search_genome(),
                              Mutation{MutationKind::kSwapKind, 0, 0, BlockKind::kMob}, space));
}

TEST(Mutate, NeckMutations) {
  const DetectorGenome g = tiny_search_genome();
  const auto w = apply_mutation(g, Mutation{MutationKind::kNeckWidth, 1, -8}, MutationSpace{});
  ASSERT_TRUE(w);
  EXPECT_EQ(w->neck->widths[1], g.neck->widths[1] - 8);
  const auto d = apply_mutation(g, Mutation{MutationKind::kNeckDepth, -1, 1}, MutationSpace{});
  ASSERT_TRUE(d);
  EXPECT_EQ(d->neck->depth, g.neck->depth + 1);
  EXPECT_FALSE(apply_mutation(g, Mutation{MutationKind::kNeckDepth, -1, -1}, MutationSpace{}));
  DetectorGenome bare = g;
  bare.neck.reset();
  EXPECT_FALSE(apply_mutation(bare, Mutation{MutationKind::kNeckDepth, -1, 1}, MutationSpace{}));
}

TEST(Mutate, RetriesExhaustedBecomesNoop) {
  MutationSpace space;
  space.kinds = {MutationKind::kWiden};
  space.max_width = 16;  // every stage of the tiny genome is already at or past it
  std::mt19937_64 rng(4);
  const DetectorGenome g = tiny_search_genome();
  const MutationOutcome m = mutate(g, space, rng);
  EXPECT_EQ(m.genome, g);
  EXPECT_EQ(m.applied.kind, MutationKind::kNoop);
  EXPECT_EQ(m.attempts, space.max_retries);
}

TEST(Mutate, AlwaysValidAndSeedDeterministic) {
  const MutationSpace space;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 a(seed), b(seed);
    DetectorGenome ga = tiny_search_genome(), gb = ga;
    for (int step = 0; step < 30; ++step) {
      ga = mutate(ga, space, a).genome;
      gb = mutate(gb, space, b).genome;
      ASSERT_NO_THROW(validate(ga));
      for (const BlockSpec& blk : ga.backbone) {
        ASSERT_LE(blk.out_ch, space.max_width);
        ASSERT_LE(blk.depth, space.max_depth);
      }
    }
    EXPECT_EQ(ga, gb);
  }
}

TEST(MutationSpace, JsonRoundTripAndErrors) {
  MutationSpace s;
  s.kinds = {MutationKind::kWiden, MutationKind::kNeckDepth};
  s.mutable_stages = {1, 2};
  s.max_width = 128;
  const MutationSpace t = mutation_space_from_json(mutation_space_to_json(s));
  EXPECT_EQ(t.kinds, s.kinds);
  EXPECT_EQ(t.mutable_stages, s.mutable_stages);
  EXPECT_EQ(t.max_width, 128);
  try {
    mutation_space_from_json(nlohmann::json{{"kinds", {"widen", "teleport"}}});
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.path(), "mutation.kinds[1]");
  }
  EXPECT_THROW(mutation_space_from_json(nlohmann::json{{"step", 12}}), SchemaError);
}

}  // namespace
}  // namespace detkit
