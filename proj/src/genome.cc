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

#include "detkit/genome.h"

#include <cmath>
#include <set>

#include "detkit/errors.h"

namespace detkit {

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::kMob: return "Mob";
    case BlockKind::kRes: return "Res";
    case BlockKind::kCsp: return "Csp";
    case BlockKind::kFocus: return "Focus";
    case BlockKind::kSpp: return "Spp";
    case BlockKind::kConvBnAct: return "ConvBnAct";
  }
  return "?";
}

BlockKind block_kind_from_string(std::string_view name) {
  for (BlockKind k : {BlockKind::kMob, BlockKind::kRes, BlockKind::kCsp,
                      BlockKind::kFocus, BlockKind::kSpp,
                      BlockKind::kConvBnAct}) {
    if (to_string(k) == name) return k;
  }
  throw InputError("unsupported block kind '" + std::string(name) + "'");
}

std::string_view to_string(FusionStyle style) {
  switch (style) {
    case FusionStyle::kConv: return "Conv";
    case FusionStyle::kCsp: return "Csp";
    case FusionStyle::kCspReparam: return "CspReparam";
    case FusionStyle::kCspReparamElan: return "CspReparamElan";
  }
  return "?";
}

FusionStyle fusion_style_from_string(std::string_view name) {
  for (FusionStyle s : {FusionStyle::kConv, FusionStyle::kCsp,
                        FusionStyle::kCspReparam,
                        FusionStyle::kCspReparamElan}) {
    if (to_string(s) == name) return s;
  }
  throw InputError("unsupported fusion style '" + std::string(name) + "'");
}

int BlockSpec::hidden_channels() const {
  const long h = std::lround(out_ch * hidden_ratio);
  return h < 1 ? 1 : static_cast<int>(h);
}

namespace {

std::string block_path(size_t i, const char* field) {
  return "backbone[" + std::to_string(i) + "]." + field;
}

void validate_block(const BlockSpec& b, size_t i) {
  if (b.in_ch < 1) throw SchemaError(block_path(i, "in_ch"), "must be >= 1");
  if (b.out_ch < 1) throw SchemaError(block_path(i, "out_ch"), "must be >= 1");
  if (b.stride != 1 && b.stride != 2) {
    throw SchemaError(block_path(i, "stride"), "must be 1 or 2");
  }
  if (b.depth < 1) throw SchemaError(block_path(i, "depth"), "must be >= 1");
  if (b.kernel < 1 || b.kernel % 2 == 0) {
    throw SchemaError(block_path(i, "kernel"), "must be a positive odd integer");
  }
  if (!(b.hidden_ratio > 0.0) || !std::isfinite(b.hidden_ratio)) {
    throw SchemaError(block_path(i, "hidden_ratio"), "must be positive");
  }
  if (b.kind == BlockKind::kFocus) {
    if (b.stride != 2) {
      throw SchemaError(block_path(i, "stride"), "Focus always has stride 2");
    }
    if (b.depth != 1) {
      throw SchemaError(block_path(i, "depth"), "Focus has depth 1");
    }
  }
  if (b.kind == BlockKind::kSpp) {
    if (b.stride != 1) {
      throw SchemaError(block_path(i, "stride"), "Spp always has stride 1");
    }
    if (b.depth != 1) {
      throw SchemaError(block_path(i, "depth"), "Spp has depth 1");
    }
  }
}

}  // namespace

void validate(const DetectorGenome& g) {
  if (g.input_channels < 1) {
    throw SchemaError("input_channels", "must be >= 1");
  }
  if (g.input_h < 1 || g.input_w < 1) {
    throw SchemaError("input_res", "dims must be >= 1");
  }
  if (g.num_classes < 1) throw SchemaError("num_classes", "must be >= 1");
  if (g.backbone.empty()) throw SchemaError("backbone", "must not be empty");

  int h = g.input_h;
  int w = g.input_w;
  int stride = 1;
  std::set<int> taps;
  for (size_t i = 0; i < g.backbone.size(); ++i) {
    const BlockSpec& b = g.backbone[i];
    validate_block(b, i);
    const int expected_in = i == 0 ? g.input_channels : g.backbone[i - 1].out_ch;
    if (b.in_ch != expected_in) {
      throw SchemaError(block_path(i, "in_ch"),
                        "expected " + std::to_string(expected_in) +
                            " to chain with the previous stage, got " +
                            std::to_string(b.in_ch));
    }
    if (b.stride == 2) {
      if (h % 2 != 0 || w % 2 != 0) {
        throw SchemaError(block_path(i, "stride"),
                          "stride 2 needs even spatial dims, got " +
                              std::to_string(h) + "x" + std::to_string(w));
      }
      h /= 2;
      w /= 2;
      stride *= 2;
    }
    taps.insert(stride);
  }

  const bool needs_pyramid = g.neck.has_value() || g.head.has_value();
  if (needs_pyramid) {
    for (int s : {8, 16, 32}) {
      if (!taps.count(s)) {
        throw SchemaError("backbone", "no stage emits the stride-" +
                                          std::to_string(s) + " scale");
      }
    }
    if (stride > 32) {
      throw SchemaError("backbone", "total stride " + std::to_string(stride) +
                                        " exceeds 32");
    }
  }

  if (g.neck) {
    const NeckConfig& n = *g.neck;
    if (n.depth < 1) throw SchemaError("neck.depth", "must be >= 1");
    for (size_t i = 0; i < 3; ++i) {
      if (n.widths[i] < 1) {
        throw SchemaError("neck.widths[" + std::to_string(i) + "]",
                          "must be >= 1");
      }
    }
    if (!(n.hidden_ratio > 0.0) || !std::isfinite(n.hidden_ratio)) {
      throw SchemaError("neck.hidden_ratio", "must be positive");
    }
  }
  if (g.head) {
    if (g.head->head_depth < 0) {
      throw SchemaError("head.head_depth", "must be >= 0");
    }
    if (g.head->reg_bins < 1) {
      throw SchemaError("head.reg_bins", "must be >= 1");
    }
  }
}

int backbone_layer_count(const DetectorGenome& genome) {
  int layers = 0;
  for (const BlockSpec& b : genome.backbone) {
    switch (b.kind) {
      case BlockKind::kMob:
      case BlockKind::kRes:
      case BlockKind::kCsp:
        layers += 2 * b.depth;
        break;
      case BlockKind::kFocus:
      case BlockKind::kConvBnAct:
        layers += b.depth;
        break;
      case BlockKind::kSpp:
        break;
    }
  }
  return layers;
}

DetectorGenome reconstructed_s_genome() {
  DetectorGenome g;
  g.name = "s-reconstruction";
  g.label = "reconstruction, not ground truth";
  g.backbone = {
      {BlockKind::kFocus, 3, 32, 2, 1, 3, 0.5},
      {BlockKind::kRes, 32, 64, 2, 1, 3, 1.0},
      {BlockKind::kRes, 64, 128, 2, 3, 3, 1.0},
      {BlockKind::kRes, 128, 256, 2, 4, 3, 1.0},
      {BlockKind::kRes, 256, 256, 1, 2, 3, 1.0},
      {BlockKind::kRes, 256, 512, 2, 2, 3, 1.0},
      {BlockKind::kSpp, 512, 512, 1, 1, 1, 0.5},
  };
  g.neck = NeckConfig{};
  g.head = HeadConfig{};
  g.num_classes = 80;
  g.input_h = 640;
  g.input_w = 640;
  return g;
}

DetectorGenome tiny_search_genome() {
  DetectorGenome g;
  g.name = "tiny-space";
  g.label = "desk-scale search space";
  g.backbone = {
      {BlockKind::kConvBnAct, 3, 16, 2, 1, 3, 0.5},
      {BlockKind::kRes, 16, 16, 2, 1, 3, 0.5},
      {BlockKind::kRes, 16, 32, 2, 1, 3, 0.5},
      {BlockKind::kRes, 32, 48, 2, 1, 3, 0.5},
      {BlockKind::kRes, 48, 64, 2, 1, 3, 0.5},
  };
  NeckConfig neck;
  neck.depth = 1;
  neck.widths = {32, 48, 64};
  g.neck = neck;
  g.head = HeadConfig{};
  g.num_classes = 8;
  g.input_h = 128;
  g.input_w = 128;
  return g;
}

}  // namespace detkit
