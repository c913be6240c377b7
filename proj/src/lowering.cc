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

#include "detkit/lowering.h"

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "detkit/errors.h"

namespace detkit {

namespace {

class Lowerer {
 public:
  Lowerer(const DetectorGenome& genome, const LoweringOptions& options)
      : genome_(genome),
        options_(options),
        graph_(FeatureShape{genome.input_channels, genome.input_h,
                            genome.input_w}) {}

  OpGraph run() {
    graph_.set_section(Section::kBackbone);
    std::array<int, 3> taps = lower_backbone();
    std::array<int, 3> features = taps;
    if (genome_.neck) {
      graph_.set_section(Section::kNeck);
      features = lower_neck(taps, *genome_.neck);
    }
    if (genome_.head) {
      graph_.set_section(Section::kHead);
      lower_head(features, *genome_.head);
    } else if (genome_.neck) {
      for (int f : features) graph_.mark_output(f);
    } else {
      graph_.mark_output(last_);
    }
    graph_.validate();
    return std::move(graph_);
  }

 private:
  int channels(int id) const { return static_cast<int>(graph_.shape_of(id).c); }

  // Conv followed by its BatchNorm, folded or explicit.
  int conv_bn(const std::string& name, int src, int out, int kernel,
              int stride, const std::string& act, int groups = 1) {
    if (options_.fold_bn) {
      return graph_.conv(name, src, out, kernel, stride, groups, true, act);
    }
    const int c =
        graph_.conv(name, src, out, kernel, stride, groups, false, act);
    return graph_.batchnorm(name + ".bn", c);
  }

  int rep_conv(const std::string& name, int src, int out, int stride,
               const std::string& act) {
    if (options_.deploy_reparam) {
      const int c = conv_bn(name, src, out, 3, stride, act);
      graph_.mark_reparam(options_.fold_bn ? c : graph_.node(c).inputs[0]);
      return c;
    }
    std::vector<int> branches;
    branches.push_back(conv_bn(name + ".dense", src, out, 3, stride, "none"));
    branches.push_back(conv_bn(name + ".1x1", src, out, 1, stride, "none"));
    if (channels(src) == out && stride == 1) {
      branches.push_back(graph_.batchnorm(name + ".identity", src));
    }
    return graph_.add(name + ".sum", branches, act);
  }

  int lower_res(const std::string& p, int x, const BlockSpec& b) {
    const int hid = b.hidden_channels();
    for (int r = 0; r < b.depth; ++r) {
      const std::string n = p + ".rep" + std::to_string(r);
      const int s = r == 0 ? b.stride : 1;
      int y = conv_bn(n + ".conv1", x, hid, 1, 1, "relu");
      y = conv_bn(n + ".conv2", y, b.out_ch, b.kernel, s, "none");
      int shortcut = x;
      if (channels(x) != b.out_ch || s != 1) {
        shortcut = conv_bn(n + ".proj", x, b.out_ch, 1, s, "none");
      }
      x = graph_.add(n + ".add", {y, shortcut}, "relu");
    }
    return x;
  }

  int lower_mob(const std::string& p, int x, const BlockSpec& b) {
    const int hid = b.hidden_channels();
    for (int r = 0; r < b.depth; ++r) {
      const std::string n = p + ".rep" + std::to_string(r);
      const int s = r == 0 ? b.stride : 1;
      int y = conv_bn(n + ".expand", x, hid, 1, 1, "relu");
      y = conv_bn(n + ".dw", y, hid, b.kernel, s, "relu", hid);
      y = conv_bn(n + ".project", y, b.out_ch, 1, 1, "none");
      if (s == 1 && channels(x) == b.out_ch) {
        y = graph_.add(n + ".add", {y, x}, "none");
      }
      x = y;
    }
    return x;
  }

  int lower_csp(const std::string& p, int x, const BlockSpec& b) {
    if (b.stride == 2 || channels(x) != b.out_ch) {
      x = conv_bn(p + ".transition", x, b.out_ch, b.kernel, b.stride, "relu");
    }
    const int hid = b.hidden_channels();
    int a = conv_bn(p + ".conv_a", x, hid, 1, 1, "relu");
    const int side = conv_bn(p + ".conv_b", x, hid, 1, 1, "relu");
    for (int r = 0; r < b.depth; ++r) {
      const std::string n = p + ".rep" + std::to_string(r);
      int y = conv_bn(n + ".conv1", a, hid, 1, 1, "relu");
      y = conv_bn(n + ".conv2", y, hid, b.kernel, 1, "relu");
      a = graph_.add(n + ".add", {y, a}, "none");
    }
    const int cat = graph_.concat(p + ".concat", {a, side});
    return conv_bn(p + ".fuse", cat, b.out_ch, 1, 1, "relu");
  }

  int lower_spp(const std::string& p, int x, const BlockSpec& b) {
    const int hid = b.hidden_channels();
    const int y = conv_bn(p + ".reduce", x, hid, 1, 1, "relu");
    std::vector<int> parts{y};
    for (int k : {5, 9, 13}) {
      parts.push_back(graph_.maxpool(p + ".pool" + std::to_string(k), y, k));
    }
    const int cat = graph_.concat(p + ".concat", parts);
    return conv_bn(p + ".fuse", cat, b.out_ch, 1, 1, "relu");
  }

  std::array<int, 3> lower_backbone() {
    int x = kGraphInput;
    int stride = 1;
    std::map<int, int> tap_by_stride;
    for (size_t i = 0; i < genome_.backbone.size(); ++i) {
      const BlockSpec& b = genome_.backbone[i];
      const std::string p = "backbone." + std::to_string(i) + "." +
                            std::string(to_string(b.kind));
      switch (b.kind) {
        case BlockKind::kConvBnAct:
          for (int r = 0; r < b.depth; ++r) {
            x = conv_bn(p + ".rep" + std::to_string(r), x, b.out_ch, b.kernel,
                        r == 0 ? b.stride : 1, "relu");
          }
          break;
        case BlockKind::kFocus: {
          const int s2d = graph_.space_to_depth(p + ".s2d", x);
          x = conv_bn(p + ".conv", s2d, b.out_ch, b.kernel, 1, "relu");
          break;
        }
        case BlockKind::kRes:
          x = lower_res(p, x, b);
          break;
        case BlockKind::kMob:
          x = lower_mob(p, x, b);
          break;
        case BlockKind::kCsp:
          x = lower_csp(p, x, b);
          break;
        case BlockKind::kSpp:
          x = lower_spp(p, x, b);
          break;
      }
      stride *= b.stride;
      tap_by_stride[stride] = x;
    }
    last_ = x;
    std::array<int, 3> taps{kGraphInput, kGraphInput, kGraphInput};
    if (tap_by_stride.count(8) && tap_by_stride.count(16) &&
        tap_by_stride.count(32)) {
      taps = {tap_by_stride[8], tap_by_stride[16], tap_by_stride[32]};
      graph_.mark_pyramid(taps[0], 8);
      graph_.mark_pyramid(taps[1], 16);
      graph_.mark_pyramid(taps[2], 32);
    }
    return taps;
  }

  // One RepGFPN fusion node: merges `srcs` (all at the same scale) into
  // `width` channels.
  int fusion(const std::string& p, const std::vector<int>& srcs, int width,
             const NeckConfig& cfg) {
    int x = srcs.size() == 1 ? srcs[0] : graph_.concat(p + ".concat", srcs);
    if (cfg.fusion_style == FusionStyle::kConv) {
      for (int r = 0; r < cfg.depth; ++r) {
        x = conv_bn(p + ".conv" + std::to_string(r), x, width, 3, 1, "relu");
      }
      return x;
    }
    const int first = width / 2;
    const int mid = width - first;
    const long hid_l = std::lround(mid * cfg.hidden_ratio);
    const int hid = hid_l < 1 ? 1 : static_cast<int>(hid_l);
    const bool reparam = cfg.fusion_style == FusionStyle::kCspReparam ||
                         cfg.fusion_style == FusionStyle::kCspReparamElan;
    const bool elan = cfg.fusion_style == FusionStyle::kCspReparamElan;

    const int a = conv_bn(p + ".conv1", x, first, 1, 1, "relu");
    int y = conv_bn(p + ".conv2", x, mid, 1, 1, "relu");
    std::vector<int> parts{a};
    for (int r = 0; r < cfg.depth; ++r) {
      const std::string n = p + ".block" + std::to_string(r);
      int z = reparam ? rep_conv(n + ".rep", y, hid, 1, "relu")
                      : conv_bn(n + ".conv_a", y, hid, 3, 1, "relu");
      z = conv_bn(n + ".conv_b", z, mid, 3, 1, "relu");
      y = graph_.add(n + ".add", {y, z}, "none");
      if (elan) parts.push_back(y);
    }
    if (!elan) parts.push_back(y);
    const int cat = graph_.concat(p + ".merge", parts);
    return conv_bn(p + ".conv3", cat, width, 1, 1, "relu");
  }

  int down(const std::string& name, int src) {
    return conv_bn(name, src, channels(src), 3, 2, "relu");
  }

  // Accelerated queen-fusion. Level order is (s8, s16, s32).
  //   top-down:  p32 <- [c32, down(c16)*]
  //              p16 <- [c16, up(p32), down(c8)*, up(c32)+]
  //              out8 <- [c8, up(p16), up(c16)+]
  //   bottom-up: out16 <- [p16, down(out8)]
  //              out32 <- [p32, down(out16), down(p16)*]
  // (*) extra_downsample links, (+) extra_upsample links.
  std::array<int, 3> lower_neck(const std::array<int, 3>& c,
                                const NeckConfig& cfg) {
    const auto& w = cfg.widths;
    std::vector<int> in32{c[2]};
    if (cfg.extra_downsample) in32.push_back(down("neck.p32.down_c16", c[1]));
    const int p32 = fusion("neck.p32", in32, w[2], cfg);

    std::vector<int> in16{c[1], graph_.upsample("neck.p16.up_p32", p32)};
    if (cfg.extra_downsample) in16.push_back(down("neck.p16.down_c8", c[0]));
    if (cfg.extra_upsample) {
      in16.push_back(graph_.upsample("neck.p16.up_c32", c[2]));
    }
    const int p16 = fusion("neck.p16", in16, w[1], cfg);

    std::vector<int> in8{c[0], graph_.upsample("neck.out8.up_p16", p16)};
    if (cfg.extra_upsample) {
      in8.push_back(graph_.upsample("neck.out8.up_c16", c[1]));
    }
    const int out8 = fusion("neck.out8", in8, w[0], cfg);

    std::vector<int> o16{p16, down("neck.out16.down_out8", out8)};
    const int out16 = fusion("neck.out16", o16, w[1], cfg);

    std::vector<int> o32{p32, down("neck.out32.down_out16", out16)};
    if (cfg.extra_downsample) o32.push_back(down("neck.out32.down_p16", p16));
    const int out32 = fusion("neck.out32", o32, w[2], cfg);
    return {out8, out16, out32};
  }

  void lower_head(const std::array<int, 3>& features, const HeadConfig& cfg) {
    static constexpr std::array<int, 3> kStrides{8, 16, 32};
    std::array<int, 3> x = features;
    for (size_t l = 0; l < 3; ++l) {
      const std::string p = "head.s" + std::to_string(kStrides[l]);
      for (int d = 0; d < cfg.head_depth; ++d) {
        x[l] = conv_bn(p + ".stem" + std::to_string(d), x[l], channels(x[l]),
                       3, 1, "relu");
      }
    }
    for (size_t l = 0; l < 3; ++l) {
      const std::string p = "head.s" + std::to_string(kStrides[l]);
      graph_.mark_output(graph_.conv(p + ".cls", x[l], genome_.num_classes, 1,
                                     1, 1, true, "none"));
      graph_.mark_output(graph_.conv(p + ".reg", x[l], 4 * cfg.reg_bins, 1, 1,
                                     1, true, "none"));
    }
  }

  const DetectorGenome& genome_;
  const LoweringOptions& options_;
  OpGraph graph_;
  int last_ = kGraphInput;
};

}  // namespace

OpGraph build_graph(const DetectorGenome& genome,
                    const LoweringOptions& options) {
  validate(genome);
  return Lowerer(genome, options).run();
}

}  // namespace detkit
