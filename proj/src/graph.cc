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

#include "detkit/graph.h"

#include <algorithm>
#include <queue>
#include <utility>

#include "json.hpp"

#include "detkit/errors.h"

namespace detkit {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kConv: return "Conv";
    case OpKind::kBatchNorm: return "BatchNorm";
    case OpKind::kAdd: return "Add";
    case OpKind::kConcat: return "Concat";
    case OpKind::kUpsample: return "Upsample";
    case OpKind::kMaxPool: return "MaxPool";
    case OpKind::kSpaceToDepth: return "SpaceToDepth";
    case OpKind::kIdentity: return "Identity";
  }
  return "?";
}

std::string_view to_string(Section section) {
  switch (section) {
    case Section::kBackbone: return "backbone";
    case Section::kNeck: return "neck";
    case Section::kHead: return "head";
    case Section::kOther: return "other";
  }
  return "?";
}

OpGraph::OpGraph(FeatureShape input) : input_(input) {
  if (input.c < 1) throw ShapeError("input.channels", "must be >= 1");
  if (input.h < 1) throw ShapeError("input.height", "must be >= 1");
  if (input.w < 1) throw ShapeError("input.width", "must be >= 1");
}

const OpNode& OpGraph::node(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) {
    throw InvariantError("unknown node id " + std::to_string(id));
  }
  return nodes_[position_[static_cast<size_t>(id)]];
}

const FeatureShape& OpGraph::shape_of(int id) const {
  if (id == kGraphInput) return input_;
  return node(id).out;
}

FeatureShape OpGraph::infer(const OpNode& n) const {
  const std::string& who = n.name;
  auto in_shape = [&](size_t i) -> const FeatureShape& {
    return shape_of(n.inputs[i]);
  };
  auto need_inputs = [&](size_t lo) {
    if (n.inputs.size() < lo) {
      throw ShapeError(who + ".inputs", "needs at least " +
                                            std::to_string(lo) + " input(s)");
    }
  };
  switch (n.kind) {
    case OpKind::kConv: {
      need_inputs(1);
      const FeatureShape& s = in_shape(0);
      if (n.inputs.size() != 1) throw ShapeError(who + ".inputs", "conv takes one input");
      if (s.c != n.in_ch) {
        throw ShapeError(who + ".in_ch", "producer has " + std::to_string(s.c) +
                                             " channels, conv expects " +
                                             std::to_string(n.in_ch));
      }
      if (n.groups < 1 || s.c % n.groups != 0 || n.out.c % n.groups != 0) {
        throw ShapeError(who + ".groups", "channels not divisible by groups");
      }
      if (n.kernel < 1 || n.kernel % 2 == 0) {
        throw ShapeError(who + ".kernel", "must be a positive odd integer");
      }
      if (n.stride < 1) throw ShapeError(who + ".stride", "must be >= 1");
      const int pad = n.kernel / 2;
      FeatureShape out{n.out.c, (s.h + 2 * pad - n.kernel) / n.stride + 1,
                       (s.w + 2 * pad - n.kernel) / n.stride + 1};
      if (out.c < 1) throw ShapeError(who + ".out_ch", "must be >= 1");
      return out;
    }
    case OpKind::kBatchNorm:
    case OpKind::kIdentity:
      need_inputs(1);
      return in_shape(0);
    case OpKind::kAdd: {
      need_inputs(2);
      const FeatureShape& s = in_shape(0);
      for (size_t i = 1; i < n.inputs.size(); ++i) {
        const FeatureShape& t = in_shape(i);
        if (t.c != s.c) throw ShapeError(who + ".channels", "add operands differ");
        if (t.h != s.h) throw ShapeError(who + ".height", "add operands differ");
        if (t.w != s.w) throw ShapeError(who + ".width", "add operands differ");
      }
      return s;
    }
    case OpKind::kConcat: {
      need_inputs(2);
      FeatureShape out = in_shape(0);
      for (size_t i = 1; i < n.inputs.size(); ++i) {
        const FeatureShape& t = in_shape(i);
        if (t.h != out.h) throw ShapeError(who + ".height", "concat operands differ");
        if (t.w != out.w) throw ShapeError(who + ".width", "concat operands differ");
        out.c += t.c;
      }
      return out;
    }
    case OpKind::kUpsample: {
      need_inputs(1);
      if (n.scale < 1) throw ShapeError(who + ".scale", "must be >= 1");
      const FeatureShape& s = in_shape(0);
      return FeatureShape{s.c, s.h * n.scale, s.w * n.scale};
    }
    case OpKind::kMaxPool: {
      need_inputs(1);
      if (n.kernel < 1 || n.kernel % 2 == 0) {
        throw ShapeError(who + ".kernel", "must be a positive odd integer");
      }
      return in_shape(0);
    }
    case OpKind::kSpaceToDepth: {
      need_inputs(1);
      const FeatureShape& s = in_shape(0);
      if (s.h % 2 != 0) throw ShapeError(who + ".height", "must be even");
      if (s.w % 2 != 0) throw ShapeError(who + ".width", "must be even");
      return FeatureShape{s.c * 4, s.h / 2, s.w / 2};
    }
  }
  throw InvariantError("unknown op kind");
}

int OpGraph::push(OpNode n) {
  n.id = static_cast<int>(nodes_.size());
  n.section = section_;
  for (int src : n.inputs) {
    if (src != kGraphInput && (src < 0 || src >= n.id)) {
      throw InvariantError(n.name + ": input " + std::to_string(src) +
                           " does not precede it");
    }
  }
  n.out = infer(n);
  position_.push_back(nodes_.size());
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

int OpGraph::conv(std::string name, int src, int64_t out_ch, int kernel,
                  int stride, int groups, bool bias, std::string act) {
  OpNode n;
  n.kind = OpKind::kConv;
  n.name = std::move(name);
  n.inputs = {src};
  n.in_ch = shape_of(src).c;
  n.out.c = out_ch;
  n.kernel = kernel;
  n.stride = stride;
  n.groups = groups;
  n.bias = bias;
  n.act = std::move(act);
  return push(std::move(n));
}

int OpGraph::batchnorm(std::string name, int src) {
  OpNode n;
  n.kind = OpKind::kBatchNorm;
  n.name = std::move(name);
  n.inputs = {src};
  return push(std::move(n));
}

int OpGraph::add(std::string name, std::vector<int> srcs, std::string act) {
  OpNode n;
  n.kind = OpKind::kAdd;
  n.name = std::move(name);
  n.inputs = std::move(srcs);
  n.act = std::move(act);
  return push(std::move(n));
}

int OpGraph::concat(std::string name, std::vector<int> srcs) {
  OpNode n;
  n.kind = OpKind::kConcat;
  n.name = std::move(name);
  n.inputs = std::move(srcs);
  return push(std::move(n));
}

int OpGraph::upsample(std::string name, int src, int factor) {
  OpNode n;
  n.kind = OpKind::kUpsample;
  n.name = std::move(name);
  n.inputs = {src};
  n.scale = factor;
  return push(std::move(n));
}

int OpGraph::maxpool(std::string name, int src, int kernel) {
  OpNode n;
  n.kind = OpKind::kMaxPool;
  n.name = std::move(name);
  n.inputs = {src};
  n.kernel = kernel;
  return push(std::move(n));
}

int OpGraph::space_to_depth(std::string name, int src) {
  OpNode n;
  n.kind = OpKind::kSpaceToDepth;
  n.name = std::move(name);
  n.inputs = {src};
  return push(std::move(n));
}

int OpGraph::identity(std::string name, int src) {
  OpNode n;
  n.kind = OpKind::kIdentity;
  n.name = std::move(name);
  n.inputs = {src};
  return push(std::move(n));
}

void OpGraph::mark_reparam(int id) {
  node(id);
  OpNode& n = nodes_[position_[static_cast<size_t>(id)]];
  if (n.kind != OpKind::kConv || n.kernel != 3) {
    throw InvariantError(n.name + ": only 3x3 convs can be reparameterized");
  }
  n.reparam = true;
}

void OpGraph::mark_output(int id) {
  node(id);
  outputs_.push_back(id);
}

void OpGraph::mark_pyramid(int id, int stride) {
  node(id);
  pyramid_.push_back(PyramidLevel{id, stride});
}

std::vector<int> OpGraph::topological_order() const {
  const size_t n = nodes_.size();
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<int>> consumers(n);
  for (const OpNode& node : nodes_) {
    for (int src : node.inputs) {
      if (src == kGraphInput) continue;
      if (src < 0 || static_cast<size_t>(src) >= n) {
        throw InvariantError(node.name + ": dangling input " +
                             std::to_string(src));
      }
      ++indegree[static_cast<size_t>(node.id)];
      consumers[static_cast<size_t>(src)].push_back(node.id);
    }
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(static_cast<int>(i));
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    const int id = ready.top();
    ready.pop();
    order.push_back(id);
    for (int c : consumers[static_cast<size_t>(id)]) {
      if (--indegree[static_cast<size_t>(c)] == 0) ready.push(c);
    }
  }
  if (order.size() != n) throw InvariantError("graph contains a cycle");
  return order;
}

void OpGraph::validate() const {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const OpNode& n = node(static_cast<int>(i));
    if (n.id != static_cast<int>(i)) {
      throw InvariantError("node ids must be 0..N-1");
    }
  }
  topological_order();
  for (const OpNode& n : nodes_) {
    const FeatureShape s = infer(n);
    if (!(s == n.out)) {
      throw ShapeError(n.name + ".out", "recorded shape disagrees with producers");
    }
  }
  for (int id : outputs_) node(id);
  for (const PyramidLevel& p : pyramid_) node(p.node);
}

OpGraph OpGraph::reordered(std::span<const int> positions) const {
  if (positions.size() != nodes_.size()) {
    throw InvariantError("reorder needs one position per node");
  }
  std::vector<OpNode> nodes;
  nodes.reserve(nodes_.size());
  for (int p : positions) {
    if (p < 0 || static_cast<size_t>(p) >= nodes_.size()) {
      throw InvariantError("reorder position out of range");
    }
    nodes.push_back(nodes_[static_cast<size_t>(p)]);
  }
  return from_nodes(input_, std::move(nodes), outputs_, pyramid_);
}

OpGraph OpGraph::from_nodes(FeatureShape input, std::vector<OpNode> nodes,
                            std::vector<int> outputs,
                            std::vector<PyramidLevel> pyramid) {
  OpGraph g(input);
  g.position_.assign(nodes.size(), nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    const int id = nodes[i].id;
    if (id < 0 || static_cast<size_t>(id) >= nodes.size() ||
        g.position_[static_cast<size_t>(id)] != nodes.size()) {
      throw InvariantError("node ids must be a permutation of 0..N-1");
    }
    g.position_[static_cast<size_t>(id)] = i;
  }
  g.nodes_ = std::move(nodes);
  g.outputs_ = std::move(outputs);
  g.pyramid_ = std::move(pyramid);
  g.validate();
  return g;
}

std::string OpGraph::to_ndjson() const {
  std::string out;
  for (const OpNode& n : nodes_) {
    nlohmann::json j = {{"id", n.id},
                        {"name", n.name},
                        {"kind", std::string(to_string(n.kind))},
                        {"section", std::string(to_string(n.section))},
                        {"inputs", n.inputs},
                        {"out", {n.out.c, n.out.h, n.out.w}}};
    switch (n.kind) {
      case OpKind::kConv:
        j["in_ch"] = n.in_ch;
        j["kernel"] = n.kernel;
        j["stride"] = n.stride;
        j["groups"] = n.groups;
        j["bias"] = n.bias;
        j["act"] = n.act;
        if (n.reparam) j["reparam"] = true;
        break;
      case OpKind::kMaxPool:
        j["kernel"] = n.kernel;
        break;
      case OpKind::kUpsample:
        j["scale"] = n.scale;
        break;
      case OpKind::kAdd:
        j["act"] = n.act;
        break;
      default:
        break;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace detkit
