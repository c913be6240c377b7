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

#include "detkit/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "detkit/errors.h"

namespace detkit {

std::string Shape4::str() const {
  std::ostringstream os;
  os << n << "x" << c << "x" << h << "x" << w;
  return os.str();
}

namespace {

void check_dims(const Shape4& s) {
  if (s.n < 1) throw ShapeError("batch", "must be >= 1, got " + s.str());
  if (s.c < 1) throw ShapeError("channels", "must be >= 1, got " + s.str());
  if (s.h < 1) throw ShapeError("height", "must be >= 1, got " + s.str());
  if (s.w < 1) throw ShapeError("width", "must be >= 1, got " + s.str());
}

}  // namespace

Tensor4::Tensor4(Shape4 shape, float fill) : shape_(shape) {
  check_dims(shape_);
  data_.assign(static_cast<size_t>(shape_.numel()), fill);
}

Tensor4::Tensor4(Shape4 shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  check_dims(shape_);
  if (static_cast<int64_t>(data_.size()) != shape_.numel()) {
    throw ShapeError("data", "length " + std::to_string(data_.size()) +
                                 " does not match dims " + shape_.str());
  }
}

void ConvParams::validate() const {
  const Shape4& ws = weight.shape();
  if (groups < 1) throw ShapeError("groups", "must be >= 1");
  if (stride < 1) throw ShapeError("stride", "must be >= 1");
  if (padding < 0) throw ShapeError("padding", "must be >= 0");
  if (ws.n % groups != 0) {
    throw ShapeError("out_ch", std::to_string(ws.n) +
                                   " not divisible by groups " +
                                   std::to_string(groups));
  }
  if (ws.h % 2 == 0) throw ShapeError("kh", "kernel height must be odd");
  if (ws.w % 2 == 0) throw ShapeError("kw", "kernel width must be odd");
  if (!bias.empty() && static_cast<int64_t>(bias.size()) != ws.n) {
    throw ShapeError("bias", "length " + std::to_string(bias.size()) +
                                 " != out_ch " + std::to_string(ws.n));
  }
}

void BnParams::validate() const {
  const size_t c = gamma.size();
  if (beta.size() != c) throw ShapeError("beta", "length != gamma length");
  if (running_mean.size() != c) {
    throw ShapeError("running_mean", "length != gamma length");
  }
  if (running_var.size() != c) {
    throw ShapeError("running_var", "length != gamma length");
  }
  for (size_t i = 0; i < c; ++i) {
    if (!(static_cast<double>(running_var[i]) + epsilon > 0.0)) {
      throw InputError("batchnorm channel " + std::to_string(i) +
                       ": running_var + epsilon must be positive");
    }
  }
}

Tensor4 conv2d_forward(const Tensor4& input, const ConvParams& p) {
  p.validate();
  const Shape4& is = input.shape();
  const Shape4& ws = p.weight.shape();
  if (is.c != p.in_channels()) {
    throw ShapeError("in_ch", "input has " + std::to_string(is.c) +
                                  " channels, weights expect " +
                                  std::to_string(p.in_channels()));
  }
  const int64_t oh = (is.h + 2 * p.padding - ws.h) / p.stride + 1;
  const int64_t ow = (is.w + 2 * p.padding - ws.w) / p.stride + 1;
  if (is.h + 2 * p.padding < ws.h || oh < 1) {
    throw ShapeError("height", "padding yields empty output");
  }
  if (is.w + 2 * p.padding < ws.w || ow < 1) {
    throw ShapeError("width", "padding yields empty output");
  }

  Tensor4 out(Shape4{is.n, ws.n, oh, ow});
  const int64_t out_per_group = ws.n / p.groups;
  const int64_t in_per_group = ws.c;
  for (int64_t n = 0; n < is.n; ++n) {
    for (int64_t oc = 0; oc < ws.n; ++oc) {
      const int64_t g = oc / out_per_group;
      const double b = p.bias.empty() ? 0.0 : p.bias[static_cast<size_t>(oc)];
      for (int64_t y = 0; y < oh; ++y) {
        for (int64_t x = 0; x < ow; ++x) {
          double acc = b;
          for (int64_t ic = 0; ic < in_per_group; ++ic) {
            const int64_t src_c = g * in_per_group + ic;
            for (int64_t ky = 0; ky < ws.h; ++ky) {
              const int64_t iy = y * p.stride - p.padding + ky;
              if (iy < 0 || iy >= is.h) continue;
              for (int64_t kx = 0; kx < ws.w; ++kx) {
                const int64_t ix = x * p.stride - p.padding + kx;
                if (ix < 0 || ix >= is.w) continue;
                acc += static_cast<double>(p.weight.at(oc, ic, ky, kx)) *
                       input.at(n, src_c, iy, ix);
              }
            }
          }
          out.at(n, oc, y, x) = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

Tensor4 batchnorm_forward(const Tensor4& input, const BnParams& bn) {
  bn.validate();
  const Shape4& s = input.shape();
  if (static_cast<int64_t>(bn.channels()) != s.c) {
    throw ShapeError("channels", "batchnorm has " +
                                     std::to_string(bn.channels()) +
                                     " channels, input has " +
                                     std::to_string(s.c));
  }
  Tensor4 out(s);
  for (int64_t c = 0; c < s.c; ++c) {
    const size_t ci = static_cast<size_t>(c);
    const double scale =
        bn.gamma[ci] / std::sqrt(static_cast<double>(bn.running_var[ci]) +
                                 bn.epsilon);
    for (int64_t n = 0; n < s.n; ++n) {
      for (int64_t y = 0; y < s.h; ++y) {
        for (int64_t x = 0; x < s.w; ++x) {
          const double v = input.at(n, c, y, x);
          out.at(n, c, y, x) = static_cast<float>(
              (v - bn.running_mean[ci]) * scale + bn.beta[ci]);
        }
      }
    }
  }
  return out;
}

ConvParams fold_batchnorm(const ConvParams& conv, const BnParams& bn) {
  conv.validate();
  bn.validate();
  const int64_t out_ch = conv.out_channels();
  if (static_cast<int64_t>(bn.channels()) != out_ch) {
    throw ShapeError("out_ch", "batchnorm has " +
                                   std::to_string(bn.channels()) +
                                   " channels, conv has " +
                                   std::to_string(out_ch));
  }
  ConvParams folded = conv;
  folded.bias.assign(static_cast<size_t>(out_ch), 0.0f);
  const Shape4& ws = conv.weight.shape();
  for (int64_t oc = 0; oc < out_ch; ++oc) {
    const size_t o = static_cast<size_t>(oc);
    const double scale =
        bn.gamma[o] /
        std::sqrt(static_cast<double>(bn.running_var[o]) + bn.epsilon);
    for (int64_t ic = 0; ic < ws.c; ++ic) {
      for (int64_t ky = 0; ky < ws.h; ++ky) {
        for (int64_t kx = 0; kx < ws.w; ++kx) {
          folded.weight.at(oc, ic, ky, kx) = static_cast<float>(
              conv.weight.at(oc, ic, ky, kx) * scale);
        }
      }
    }
    const double b = conv.bias.empty() ? 0.0 : conv.bias[o];
    folded.bias[o] =
        static_cast<float>((b - bn.running_mean[o]) * scale + bn.beta[o]);
  }
  return folded;
}

std::vector<ChannelStat> channel_stats(const Tensor4& feat) {
  const Shape4& s = feat.shape();
  const double count = static_cast<double>(s.n * s.h * s.w);
  std::vector<ChannelStat> stats(static_cast<size_t>(s.c));
  for (int64_t c = 0; c < s.c; ++c) {
    double sum = 0.0;
    for (int64_t n = 0; n < s.n; ++n)
      for (int64_t y = 0; y < s.h; ++y)
        for (int64_t x = 0; x < s.w; ++x) sum += feat.at(n, c, y, x);
    const double mean = sum / count;
    double sq = 0.0;
    for (int64_t n = 0; n < s.n; ++n) {
      for (int64_t y = 0; y < s.h; ++y) {
        for (int64_t x = 0; x < s.w; ++x) {
          const double d = feat.at(n, c, y, x) - mean;
          sq += d * d;
        }
      }
    }
    ChannelStat& st = stats[static_cast<size_t>(c)];
    st.mean = mean;
    st.std = std::sqrt(sq / count);
    st.constant = (sq == 0.0);
  }
  return stats;
}

Tensor4 add(const Tensor4& a, const Tensor4& b) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError("shape", a.shape().str() + " vs " + b.shape().str());
  }
  Tensor4 out(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (size_t i = 0; i < o.size(); ++i) {
    o[i] = static_cast<float>(static_cast<double>(x[i]) + y[i]);
  }
  return out;
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError("shape", a.shape().str() + " vs " + b.shape().str());
  }
  double worst = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(x[i]) - y[i]));
  }
  return worst;
}

}  // namespace detkit
