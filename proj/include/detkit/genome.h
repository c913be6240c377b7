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

#ifndef DETKIT_GENOME_H_
#define DETKIT_GENOME_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace detkit {

enum class BlockKind { kMob, kRes, kCsp, kFocus, kSpp, kConvBnAct };

std::string_view to_string(BlockKind kind);
// Throws InputError on unknown names.
BlockKind block_kind_from_string(std::string_view name);

// One backbone stage. `depth` repeats the block's bottleneck; only the first
// repeat carries the stride. `hidden_ratio` sets the internal width as a
// fraction of out_ch: the bottleneck width for Res, the expansion width for
// Mob, each CSP half for Csp, and the pooled width for Spp.
struct BlockSpec {
  BlockKind kind = BlockKind::kConvBnAct;
  int in_ch = 3;
  int out_ch = 16;
  int stride = 1;
  int depth = 1;
  int kernel = 3;
  double hidden_ratio = 0.5;

  int hidden_channels() const;
  bool operator==(const BlockSpec&) const = default;
};

enum class FusionStyle { kConv, kCsp, kCspReparam, kCspReparamElan };

std::string_view to_string(FusionStyle style);
FusionStyle fusion_style_from_string(std::string_view name);

// RepGFPN neck. widths are the fused output channels at strides 8/16/32.
struct NeckConfig {
  int depth = 3;
  std::array<int, 3> widths{96, 192, 384};
  FusionStyle fusion_style = FusionStyle::kCspReparamElan;
  bool extra_upsample = false;
  bool extra_downsample = true;
  double hidden_ratio = 0.5;

  bool operator==(const NeckConfig&) const = default;
};

// head_depth == 0 is ZeroHead: one cls and one reg projection per scale.
struct HeadConfig {
  int head_depth = 0;
  int reg_bins = 16;

  bool operator==(const HeadConfig&) const = default;
};

struct DetectorGenome {
  std::string name;
  std::string label;
  std::vector<BlockSpec> backbone;
  std::optional<NeckConfig> neck;
  std::optional<HeadConfig> head;
  int num_classes = 80;
  int input_channels = 3;
  int input_h = 640;
  int input_w = 640;

  bool operator==(const DetectorGenome&) const = default;
};

// Checks every structural invariant, including channel chaining and the
// stride-8/16/32 pyramid when a neck or head is present. Throws SchemaError
// naming the offending field.
void validate(const DetectorGenome& genome);

// Conv layers along the backbone's main path; used by the block scale rule.
int backbone_layer_count(const DetectorGenome& genome);

// Reconstructed S-scale detector: Focus stem, Res stages, SPP,
// RepGFPN (depth 3, widths 96/192/384) and ZeroHead. The released stage
// repeats are unpublished, so this is a reconstruction, not ground truth.
DetectorGenome reconstructed_s_genome();

// Small three-scale genome used as the desk-scale search space.
DetectorGenome tiny_search_genome();

}  // namespace detkit

#endif  // DETKIT_GENOME_H_
