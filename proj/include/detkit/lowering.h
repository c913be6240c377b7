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

#ifndef DETKIT_LOWERING_H_
#define DETKIT_LOWERING_H_

#include "detkit/genome.h"
#include "detkit/graph.h"

namespace detkit {

struct LoweringOptions {
  // Conv+BN pairs become one biased conv. When false every conv is emitted
  // bias-free and followed by an explicit BatchNorm node.
  bool fold_bn = true;
  // RepConv blocks become a single 3x3 conv (inference form). When false
  // they keep their 3x3, 1x1 and identity branches plus the summing add.
  bool deploy_reparam = true;
};

// Lowers a genome to primitive operators at the genome's input resolution.
// Validates the genome first; never returns a partial graph.
//
// Block templates (per repeat r; only r == 0 carries the stage stride):
//   Res:   conv1x1(in->hid) -> convKxK(hid->out, s) ; shortcut is the input
//          or, on r == 0 when shape changes, conv1x1(in->out, s) ; add.
//   Mob:   conv1x1(in->hid) -> dwconvKxK(hid, s) -> conv1x1(hid->out) ;
//          add with the input when s == 1 and in == out.
//   Csp:   [convKxK(in->out, s) when s == 2 or in != out] ;
//          conv1x1 a,b (out->hid) ; depth x (conv1x1, convKxK, add) on a ;
//          concat(a, b) -> conv1x1(2hid->out).
//   Focus: space-to-depth -> convKxK(4in->out).
//   Spp:   conv1x1(in->hid) ; maxpool 5/9/13 ; concat -> conv1x1(4hid->out).
// The neck and head templates are documented in docs/lowering.md.
OpGraph build_graph(const DetectorGenome& genome,
                    const LoweringOptions& options = {});

}  // namespace detkit

#endif  // DETKIT_LOWERING_H_
