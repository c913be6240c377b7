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

#include "detkit/reparam.h"

#include <cmath>

#include "detkit/errors.h"

namespace detkit {

void RepBranchParams::validate() const {
  conv3.conv.validate();
  conv1.conv.validate();
  const ConvParams& c3 = conv3.conv;
  const ConvParams& c1 = conv1.conv;
  if (c3.kernel_h() != 3 || c3.kernel_w() != 3) {
    throw ShapeError("conv3.kernel", "dense branch must be 3x3");
  }
  if (c1.kernel_h() != 1 || c1.kernel_w() != 1) {
    throw ShapeError("conv1.kernel", "pointwise branch must be 1x1");
  }
  if (c3.padding != 1) throw ShapeError("conv3.padding", "must be 1");
  if (c1.padding != 0) throw ShapeError("conv1.padding", "must be 0");
  if (c3.in_channels() != c1.in_channels()) {
    throw ShapeError("conv1.in_ch", "branches disagree on input channels");
  }
  if (c3.out_channels() != c1.out_channels()) {
    throw ShapeError("conv1.out_ch", "branches disagree on output channels");
  }
  if (c3.stride != c1.stride) {
    throw ShapeError("conv1.stride", "branches disagree on stride");
  }
  if (c3.groups != c1.groups) {
    throw ShapeError("conv1.groups", "branches disagree on groups");
  }
  if (static_cast<int64_t>(conv3.bn.channels()) != c3.out_channels()) {
    throw ShapeError("conv3.bn", "channel count != out_ch");
  }
  if (static_cast<int64_t>(conv1.bn.channels()) != c1.out_channels()) {
    throw ShapeError("conv1.bn", "channel count != out_ch");
  }
  if (identity_bn) {
    if (c3.in_channels() != c3.out_channels()) {
      throw InputError("identity branch requires in_ch == out_ch (got " +
                       std::to_string(c3.in_channels()) + " vs " +
                       std::to_string(c3.out_channels()) + ")");
    }
    if (c3.stride != 1) {
      throw InputError("identity branch requires stride 1");
    }
    if (static_cast<int64_t>(identity_bn->channels()) != c3.out_channels()) {
      throw ShapeError("identity_bn", "channel count != out_ch");
    }
    identity_bn->validate();
  }
}

Tensor4 rep_branch_forward(const Tensor4& input, const RepBranchParams& p) {
  p.validate();
  Tensor4 y = batchnorm_forward(conv2d_forward(input, p.conv3.conv), p.conv3.bn);
  y = add(y, batchnorm_forward(conv2d_forward(input, p.conv1.conv), p.conv1.bn));
  if (p.identity_bn) y = add(y, batchnorm_forward(input, *p.identity_bn));
  return y;
}

ConvParams reparam_fold(const RepBranchParams& p) {
  p.validate();
  const ConvParams dense = fold_batchnorm(p.conv3.conv, p.conv3.bn);
  const ConvParams point = fold_batchnorm(p.conv1.conv, p.conv1.bn);
  const int64_t out_ch = dense.out_channels();
  const int64_t in_per_group = dense.weight.shape().c;

  ConvParams fused = dense;
  for (int64_t o = 0; o < out_ch; ++o) {
    for (int64_t i = 0; i < in_per_group; ++i) {
      fused.weight.at(o, i, 1, 1) = static_cast<float>(
          static_cast<double>(dense.weight.at(o, i, 1, 1)) +
          point.weight.at(o, i, 0, 0));
    }
    const size_t oi = static_cast<size_t>(o);
    double bias = static_cast<double>(dense.bias[oi]) + point.bias[oi];
    if (p.identity_bn) {
      const BnParams& bn = *p.identity_bn;
      const double scale =
          bn.gamma[oi] /
          std::sqrt(static_cast<double>(bn.running_var[oi]) + bn.epsilon);
      // Output channel o reads input channel o, which sits at offset
      // o % in_per_group inside its group.
      const int64_t i = o % in_per_group;
      fused.weight.at(o, i, 1, 1) = static_cast<float>(
          static_cast<double>(fused.weight.at(o, i, 1, 1)) + scale);
      bias += bn.beta[oi] - bn.running_mean[oi] * scale;
    }
    fused.bias[oi] = static_cast<float>(bias);
  }
  return fused;
}

}  // namespace detkit
