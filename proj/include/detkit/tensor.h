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

#ifndef DETKIT_TENSOR_H_
#define DETKIT_TENSOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace detkit {

// (batch, channels, height, width).
struct Shape4 {
  int64_t n = 1;
  int64_t c = 1;
  int64_t h = 1;
  int64_t w = 1;

  int64_t numel() const { return n * c * h * w; }
  std::string str() const;
  bool operator==(const Shape4&) const = default;
};

// Dense NCHW array. Storage is float32; kernels accumulate in double.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, float fill = 0.0f);
  Tensor4(Shape4 shape, std::vector<float> data);

  const Shape4& shape() const { return shape_; }
  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }
  const std::vector<float>& vec() const { return data_; }

  int64_t index(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  float& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(index(n, c, h, w))];
  }
  float at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(index(n, c, h, w))];
  }

 private:
  Shape4 shape_{};
  std::vector<float> data_ = std::vector<float>(1, 0.0f);
};

// Convolution weights laid out (out_ch, in_ch / groups, kh, kw).
struct ConvParams {
  Tensor4 weight;
  std::vector<float> bias;
  int stride = 1;
  int padding = 0;
  int groups = 1;

  int64_t out_channels() const { return weight.shape().n; }
  int64_t in_channels() const { return weight.shape().c * groups; }
  int64_t kernel_h() const { return weight.shape().h; }
  int64_t kernel_w() const { return weight.shape().w; }

  // Throws ShapeError when the layout invariants do not hold.
  void validate() const;
};

struct BnParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;
  double epsilon = 1e-5;

  size_t channels() const { return gamma.size(); }
  void validate() const;
};

// Cross-correlation (no kernel flip) with symmetric zero padding.
Tensor4 conv2d_forward(const Tensor4& input, const ConvParams& p);

// Inference-mode batch normalization.
Tensor4 batchnorm_forward(const Tensor4& input, const BnParams& bn);

// Returns conv' with conv2d_forward(x, conv') == bn(conv2d_forward(x, conv)).
ConvParams fold_batchnorm(const ConvParams& conv, const BnParams& bn);

struct ChannelStat {
  double mean = 0.0;
  double std = 0.0;
  bool constant = false;  // std == 0 exactly
};

// Per-channel mean and population std over batch and spatial positions.
std::vector<ChannelStat> channel_stats(const Tensor4& feat);

Tensor4 add(const Tensor4& a, const Tensor4& b);
double max_abs_diff(const Tensor4& a, const Tensor4& b);

}  // namespace detkit

#endif  // DETKIT_TENSOR_H_
