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

#ifndef DETKIT_REPARAM_H_
#define DETKIT_REPARAM_H_

#include <optional>

#include "detkit/tensor.h"

namespace detkit {

struct ConvBn {
  ConvParams conv;
  BnParams bn;
};

// Training-time RepConv: a 3x3 conv+BN, a 1x1 conv+BN and an optional
// identity BN, all summed. Both convs share in/out channels, stride and
// groups; the 3x3 uses padding 1 and the 1x1 padding 0.
struct RepBranchParams {
  ConvBn conv3;
  ConvBn conv1;
  std::optional<BnParams> identity_bn;

  // Throws InputError/ShapeError when the branches are incompatible.
  void validate() const;
};

// Reference multi-branch forward: b3(x) + b1(x) + id(x).
Tensor4 rep_branch_forward(const Tensor4& input, const RepBranchParams& p);

// Single 3x3 conv equal to the branch sum. The 1x1 kernel is zero-padded
// into the 3x3 centre; the identity branch becomes a centred Dirac kernel
// scaled by its BN fold.
ConvParams reparam_fold(const RepBranchParams& p);

}  // namespace detkit

#endif  // DETKIT_REPARAM_H_
