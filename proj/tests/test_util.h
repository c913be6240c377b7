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

#ifndef DETKIT_TESTS_TEST_UTIL_H_
#define DETKIT_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "detkit/tensor.h"

namespace detkit::testing {

inline std::string source_path(const std::string& rel) {
  return std::string(DETKIT_SOURCE_DIR) + "/" + rel;
}

inline Tensor4 random_tensor(Shape4 shape, std::mt19937_64& rng, float lo = -1.0f,
                             float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> data(static_cast<size_t>(shape.numel()));
  for (float& v : data) v = dist(rng);
  return Tensor4(shape, std::move(data));
}

inline std::vector<float> random_vector(size_t n, std::mt19937_64& rng, float lo,
                                        float hi) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(n);
  for (float& x : v) x = dist(rng);
  return v;
}

inline ConvParams random_conv(int64_t in, int64_t out, int k, int stride, int groups,
                              std::mt19937_64& rng) {
  ConvParams p;
  p.weight = random_tensor(Shape4{out, in / groups, k, k}, rng);
  p.bias = random_vector(static_cast<size_t>(out), rng, -0.5f, 0.5f);
  p.stride = stride;
  p.padding = k / 2;
  p.groups = groups;
  return p;
}

inline BnParams random_bn(size_t c, std::mt19937_64& rng) {
  BnParams bn;
  bn.gamma = random_vector(c, rng, 0.5f, 1.5f);
  bn.beta = random_vector(c, rng, -0.5f, 0.5f);
  bn.running_mean = random_vector(c, rng, -0.5f, 0.5f);
  bn.running_var = random_vector(c, rng, 0.5f, 2.0f);
  bn.epsilon = 1e-5;
  return bn;
}

// Plain quadruple-loop cross-correlation, kept independent of the library
// kernel.
inline std::vector<double> naive_conv(const Tensor4& x, const ConvParams& p) {
  const Shape4 s = x.shape();
  const Shape4 w = p.weight.shape();
  const int64_t out_c = w.n, kh = w.h, kw = w.w, g = p.groups;
  const int64_t in_per = s.c / g, out_per = out_c / g;
  const int64_t oh = (s.h + 2 * p.padding - kh) / p.stride + 1;
  const int64_t ow = (s.w + 2 * p.padding - kw) / p.stride + 1;
  std::vector<double> y(static_cast<size_t>(s.n * out_c * oh * ow));
  size_t idx = 0;
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t o = 0; o < out_c; ++o)
      for (int64_t i = 0; i < oh; ++i)
        for (int64_t j = 0; j < ow; ++j) {
          double acc = p.bias.empty() ? 0.0 : p.bias[static_cast<size_t>(o)];
          const int64_t grp = o / out_per;
          for (int64_t c = 0; c < in_per; ++c)
            for (int64_t a = 0; a < kh; ++a)
              for (int64_t b = 0; b < kw; ++b) {
                const int64_t yy = i * p.stride - p.padding + a;
                const int64_t xx = j * p.stride - p.padding + b;
                if (yy < 0 || yy >= s.h || xx < 0 || xx >= s.w) continue;
                acc += static_cast<double>(x.at(n, grp * in_per + c, yy, xx)) *
                       p.weight.at(o, c, a, b);
              }
          y[idx++] = acc;
        }
  return y;
}

}  // namespace detkit::testing

#endif  // DETKIT_TESTS_TEST_UTIL_H_
