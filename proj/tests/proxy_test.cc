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

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "detkit/errors.h"
#include "detkit/lowering.h"
#include "detkit/proxy.h"

namespace detkit {
namespace {

const double kUnitEntropy = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

TEST(EntropyProxy, IdentityGraphClosedForm) {
  OpGraph g(FeatureShape{64, 20, 20});
  g.mark_output(g.identity("id", kGraphInput));
  const ProxyScore s = entropy_score(g);
  EXPECT_NEAR(s.value, 64.0 * 400.0 * kUnitEntropy, 1e-9 * s.value);
  ASSERT_EQ(s.per_scale.size(), 1u);
  EXPECT_EQ(s.per_scale[0], s.value);
}

TEST(EntropyProxy, VariancePreservingConvLeavesScore) {
  OpGraph a(FeatureShape{16, 8, 8});
  a.mark_output(a.identity("id", kGraphInput));
  OpGraph b(FeatureShape{16, 8, 8});
  b.mark_output(b.conv("c", kGraphInput, 16, 3, 1));
  EXPECT_DOUBLE_EQ(entropy_score(a).value, entropy_score(b).value);
}

// Hand propagation: x (v = 1) -> conv (v = 1) ; add(conv, x) has v = 2, so
// every element gains 0.5 ln 2 of entropy.
TEST(EntropyProxy, ResidualAddDoublesVariance) {
  OpGraph plain(FeatureShape{8, 4, 4});
  const int c0 = plain.conv("c", kGraphInput, 8, 3, 1);
  plain.mark_output(plain.identity("out", c0));
  OpGraph res(FeatureShape{8, 4, 4});
  const int c1 = res.conv("c", kGraphInput, 8, 3, 1);
  res.mark_output(res.add("sum", {c1, kGraphInput}));
  const double elements = 8.0 * 16.0;
  EXPECT_NEAR(entropy_score(res).value - entropy_score(plain).value,
              elements * 0.5 * std::log(2.0), 1e-9);
  const std::vector<std::vector<double>> v = EntropyProxy().propagate(res);
  for (double x : v[1]) EXPECT_DOUBLE_EQ(x, 2.0);
}

TEST(EntropyProxy, ConcatKeepsPartVariances) {
  OpGraph g(FeatureShape{2, 4, 4});
  const int sum = g.add("sum", {kGraphInput, kGraphInput});
  const int cat = g.concat("cat", {kGraphInput, sum});
  g.mark_output(cat);
  const std::vector<double> v = EntropyProxy().propagate(g)[static_cast<size_t>(cat)];
  EXPECT_EQ(v, (std::vector<double>{1.0, 1.0, 2.0, 2.0}));
  // A conv after the concat averages its fan-in.
  const int mix = g.conv("mix", cat, 3, 1, 1);
  const std::vector<double> m = EntropyProxy().propagate(g)[static_cast<size_t>(mix)];
  EXPECT_EQ(m, (std::vector<double>{1.5, 1.5, 1.5}));
}

TEST(EntropyProxy, ScaleWeightsAndValueSum) {
  const OpGraph g = build_graph(tiny_search_genome());
  ProxyOptions o;
  o.scale_weights = {1.0, 2.0, 0.5};
  const ProxyScore plain = entropy_score(g);
  const ProxyScore weighted = entropy_score(g, o);
  ASSERT_EQ(weighted.per_scale.size(), 3u);
  EXPECT_NEAR(std::accumulate(weighted.per_scale.begin(), weighted.per_scale.end(), 0.0),
              weighted.value, 1e-9 * weighted.value);
  EXPECT_NEAR(weighted.per_scale[1], 2.0 * plain.per_scale[1], 1e-9 * plain.value);
  o.scale_weights = {1.0};
  EXPECT_THROW(entropy_score(g, o), InputError);
}

TEST(EntropyProxy, DeterministicAndReorderInvariant) {
  const OpGraph g = build_graph(reconstructed_s_genome());
  std::vector<int> positions(g.size());
  std::iota(positions.begin(), positions.end(), 0);
  std::mt19937_64 rng(9);
  std::shuffle(positions.begin(), positions.end(), rng);
  const ProxyScore a = entropy_score(g);
  EXPECT_EQ(entropy_score(g).value, a.value);
  EXPECT_EQ(entropy_score(g.reordered(positions)).value, a.value);
}

TEST(EntropyProxy, WideningEveryStageRaisesScore) {
  DetectorGenome g = tiny_search_genome();
  DetectorGenome wide = g;
  for (BlockSpec& b : wide.backbone) {
    b.in_ch = b.in_ch == 3 ? 3 : 2 * b.in_ch;
    b.out_ch *= 2;
  }
  EXPECT_GT(entropy_score(build_graph(wide)).value, entropy_score(build_graph(g)).value);
}

TEST(EntropyProxy, StrictlyIncreasingInTapWidth) {
  DetectorGenome g = tiny_search_genome();
  double prev = entropy_score(build_graph(g)).value;
  for (int step = 0; step < 4; ++step) {
    g.backbone[2].out_ch += 8;
    g.backbone[3].in_ch = g.backbone[2].out_ch;
    const double next = entropy_score(build_graph(g)).value;
    EXPECT_GT(next, prev);
    prev = next;
  }
}

TEST(EntropyProxy, ScoresPyramidWhenPresentElseOutputs) {
  DetectorGenome g = tiny_search_genome();
  EXPECT_EQ(entropy_score(build_graph(g)).per_scale.size(), 3u);
  g.neck.reset();
  g.head.reset();
  g.backbone.resize(2);
  EXPECT_EQ(entropy_score(build_graph(g)).per_scale.size(), 1u);
}

TEST(EntropyProxy, GraphWithoutScalesRejected) {
  OpGraph g(FeatureShape{2, 2, 2});
  g.identity("id", kGraphInput);
  EXPECT_THROW(entropy_score(g), InputError);
}

}  // namespace
}  // namespace detkit
