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

#ifndef DETKIT_GRAPH_H_
#define DETKIT_GRAPH_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace detkit {

enum class OpKind {
  kConv,
  kBatchNorm,
  kAdd,
  kConcat,
  kUpsample,
  kMaxPool,
  kSpaceToDepth,
  kIdentity,
};

std::string_view to_string(OpKind kind);

enum class Section { kBackbone, kNeck, kHead, kOther };

std::string_view to_string(Section section);

// Per-sample feature shape; graphs are lowered at batch 1.
struct FeatureShape {
  int64_t c = 1;
  int64_t h = 1;
  int64_t w = 1;

  int64_t numel() const { return c * h * w; }
  bool operator==(const FeatureShape&) const = default;
};

inline constexpr int kGraphInput = -1;

struct OpNode {
  int id = -1;
  OpKind kind = OpKind::kIdentity;
  std::string name;
  Section section = Section::kOther;
  std::vector<int> inputs;
  FeatureShape out;

  // Conv attributes. `kernel` is also the MaxPool window.
  int64_t in_ch = 0;
  int kernel = 1;
  int stride = 1;
  int groups = 1;
  bool bias = false;
  // True for a 3x3 conv that stands in for a folded multi-branch RepConv.
  bool reparam = false;
  // Upsample factor.
  int scale = 1;
  // Recorded for reference; activations carry no cost by default.
  std::string act = "none";
};

struct PyramidLevel {
  int node = -1;
  int stride = 0;
};

// Operator DAG with resolved shapes. Node ids are 0..N-1 and every builder
// call checks its input shapes, so a constructed graph is always valid.
class OpGraph {
 public:
  explicit OpGraph(FeatureShape input);

  void set_section(Section section) { section_ = section; }

  int conv(std::string name, int src, int64_t out_ch, int kernel, int stride,
           int groups = 1, bool bias = true, std::string act = "relu");
  int batchnorm(std::string name, int src);
  int add(std::string name, std::vector<int> srcs, std::string act = "none");
  int concat(std::string name, std::vector<int> srcs);
  int upsample(std::string name, int src, int factor = 2);
  int maxpool(std::string name, int src, int kernel);
  int space_to_depth(std::string name, int src);
  int identity(std::string name, int src);

  // Flags a conv as the deployed form of a multi-branch RepConv.
  void mark_reparam(int node);
  void mark_output(int node);
  void mark_pyramid(int node, int stride);

  const FeatureShape& input_shape() const { return input_; }
  const std::vector<OpNode>& nodes() const { return nodes_; }
  const OpNode& node(int id) const;
  // kGraphInput resolves to the input shape.
  const FeatureShape& shape_of(int id) const;
  const std::vector<int>& outputs() const { return outputs_; }
  const std::vector<PyramidLevel>& pyramid() const { return pyramid_; }
  size_t size() const { return nodes_.size(); }

  // Kahn order, ties broken by id. Throws InvariantError on a cycle.
  std::vector<int> topological_order() const;

  // Re-derives every shape from its producers. Throws on any violation.
  void validate() const;

  // Same nodes stored in a different order: result.nodes()[i] is
  // nodes()[positions[i]].
  OpGraph reordered(std::span<const int> positions) const;

  // Builds from explicit nodes, e.g. a decoded graph. Validates.
  static OpGraph from_nodes(FeatureShape input, std::vector<OpNode> nodes,
                            std::vector<int> outputs,
                            std::vector<PyramidLevel> pyramid);

  // One JSON object per node in storage order.
  std::string to_ndjson() const;

 private:
  int push(OpNode node);
  FeatureShape infer(const OpNode& node) const;

  FeatureShape input_;
  Section section_ = Section::kOther;
  std::vector<OpNode> nodes_;
  std::vector<size_t> position_;  // id -> index into nodes_
  std::vector<int> outputs_;
  std::vector<PyramidLevel> pyramid_;
};

}  // namespace detkit

#endif  // DETKIT_GRAPH_H_
