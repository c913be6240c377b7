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

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"

#include "detkit/errors.h"
#include "detkit/graph.h"
#include "detkit/lowering.h"

namespace detkit {
namespace {

std::string shape_dim_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ShapeError& e) {
    return e.dim();
  }
  return "";
}

TEST(OpGraph, BuildersInferShapes) {
  OpGraph g(FeatureShape{3, 32, 32});
  const int s2d = g.space_to_depth("s2d", kGraphInput);
  EXPECT_EQ(g.shape_of(s2d), (FeatureShape{12, 16, 16}));
  const int c = g.conv("c", s2d, 24, 3, 2);
  EXPECT_EQ(g.shape_of(c), (FeatureShape{24, 8, 8}));
  const int dw = g.conv("dw", c, 24, 5, 1, 24);
  EXPECT_EQ(g.shape_of(dw), (FeatureShape{24, 8, 8}));
  const int up = g.upsample("up", dw);
  EXPECT_EQ(g.shape_of(up), (FeatureShape{24, 16, 16}));
  const int pool = g.maxpool("pool", c, 5);
  EXPECT_EQ(g.shape_of(pool), (FeatureShape{24, 8, 8}));
  const int cat = g.concat("cat", {c, dw, pool});
  EXPECT_EQ(g.shape_of(cat), (FeatureShape{72, 8, 8}));
  const int sum = g.add("sum", {c, dw});
  EXPECT_EQ(g.shape_of(sum), (FeatureShape{24, 8, 8}));
  EXPECT_EQ(g.size(), 7u);
  EXPECT_NO_THROW(g.validate());
}

TEST(OpGraph, ShapeErrorsNameNodeAndDim) {
  OpGraph g(FeatureShape{3, 8, 8});
  const int a = g.conv("a", kGraphInput, 4, 3, 1);
  const int b = g.conv("b", kGraphInput, 4, 3, 2);
  EXPECT_EQ(shape_dim_of([&] { g.add("sum", {a, b}); }), "sum.height");
  const int c = g.conv("c", kGraphInput, 5, 1, 1);
  EXPECT_EQ(shape_dim_of([&] { g.add("sum2", {a, c}); }), "sum2.channels");
  EXPECT_EQ(shape_dim_of([&] { g.conv("g", a, 6, 3, 1, 3); }), "g.groups");
  EXPECT_EQ(shape_dim_of([&] { g.conv("k", a, 6, 2, 1); }), "k.kernel");
  OpGraph odd(FeatureShape{3, 7, 8});
  EXPECT_EQ(shape_dim_of([&] { odd.space_to_depth("s", kGraphInput); }), "s.height");
}

TEST(OpGraph, FailedBuilderLeavesGraphUnchanged) {
  OpGraph g(FeatureShape{3, 8, 8});
  const int a = g.conv("a", kGraphInput, 4, 3, 1);
  EXPECT_THROW(g.conv("bad", a, 4, 3, 1, 3), ShapeError);
  EXPECT_EQ(g.size(), 1u);
}

TEST(OpGraph, TopologicalOrderRespectsEdges) {
  const OpGraph g = build_graph(tiny_search_genome());
  const std::vector<int> order = g.topological_order();
  ASSERT_EQ(order.size(), g.size());
  std::vector<size_t> pos(g.size());
  for (size_t i = 0; i < order.size(); ++i) pos[static_cast<size_t>(order[i])] = i;
  for (const OpNode& n : g.nodes()) {
    for (int src : n.inputs) {
      if (src != kGraphInput) {
        EXPECT_LT(pos[static_cast<size_t>(src)], pos[static_cast<size_t>(n.id)]);
      }
    }
  }
}

TEST(OpGraph, ReorderedKeepsIdsAndOrder) {
  const OpGraph g = build_graph(tiny_search_genome());
  std::vector<int> positions(g.size());
  std::iota(positions.begin(), positions.end(), 0);
  std::mt19937_64 rng(5);
  std::shuffle(positions.begin(), positions.end(), rng);
  const OpGraph r = g.reordered(positions);
  EXPECT_EQ(r.topological_order(), g.topological_order());
  for (const OpNode& n : g.nodes()) {
    EXPECT_EQ(r.node(n.id).name, n.name);
    EXPECT_EQ(r.shape_of(n.id), n.out);
  }
  EXPECT_EQ(r.outputs(), g.outputs());
}

TEST(OpGraph, FromNodesRejectsCycles) {
  OpGraph g(FeatureShape{4, 8, 8});
  const int a = g.conv("a", kGraphInput, 4, 3, 1);
  const int b = g.conv("b", a, 4, 3, 1);
  std::vector<OpNode> nodes = g.nodes();
  nodes[static_cast<size_t>(a)].inputs = {b};
  EXPECT_THROW(OpGraph::from_nodes(g.input_shape(), nodes, {b}, {}), InvariantError);
}

TEST(OpGraph, FromNodesRejectsStaleShapes) {
  OpGraph g(FeatureShape{4, 8, 8});
  const int a = g.conv("a", kGraphInput, 4, 3, 1);
  std::vector<OpNode> nodes = g.nodes();
  nodes[static_cast<size_t>(a)].out.h = 3;
  EXPECT_THROW(OpGraph::from_nodes(g.input_shape(), nodes, {a}, {}), ShapeError);
}

TEST(OpGraph, NdjsonHasOneLinePerNode) {
  const OpGraph g = build_graph(tiny_search_genome());
  std::istringstream in(g.to_ndjson());
  std::string line;
  size_t lines = 0;
  while (std::getline(in, line)) {
    const nlohmann::json doc = nlohmann::json::parse(line);
    EXPECT_EQ(doc["id"], lines);
    ++lines;
  }
  EXPECT_EQ(lines, g.size());
}

TEST(OpGraph, ReparamMarkOnlyOnThreeByThree) {
  OpGraph g(FeatureShape{4, 8, 8});
  const int a = g.conv("a", kGraphInput, 4, 1, 1);
  EXPECT_THROW(g.mark_reparam(a), InvariantError);
  const int b = g.conv("b", a, 4, 3, 1);
  g.mark_reparam(b);
  EXPECT_TRUE(g.node(b).reparam);
}

}  // namespace
}  // namespace detkit
