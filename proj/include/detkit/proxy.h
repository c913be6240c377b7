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

#ifndef DETKIT_PROXY_H_
#define DETKIT_PROXY_H_

#include <vector>

#include "json.hpp"

#include "detkit/graph.h"

namespace detkit {

struct ProxyScore {
  double value = 0.0;
  // Weighted contribution of each scored scale; sums to `value`.
  std::vector<double> per_scale;
};

struct ProxyOptions {
  double input_variance = 1.0;
  // One weight per scored scale; empty means all ones.
  std::vector<double> scale_weights;
};

// Training-free architecture score. Implementations must be deterministic
// and independent of node storage order.
class Proxy {
 public:
  virtual ~Proxy() = default;
  virtual ProxyScore score(const OpGraph& graph) const = 0;
};

// Gaussian variance-propagation entropy. Each channel carries a closed-form
// activation variance: a fan-in-scaled conv outputs the mean variance of its
// group's input channels, add sums its operands, concat keeps each part,
// and resampling, pooling, BN and identity preserve it. The score is
//   Σ_scales weight_s · H_s·W_s · Σ_c 0.5·ln(2πe·v_c)
// over the graph's pyramid levels, or its outputs when it has none.
class EntropyProxy : public Proxy {
 public:
  explicit EntropyProxy(ProxyOptions options = {}) : options_(std::move(options)) {}
  ProxyScore score(const OpGraph& graph) const override;

  // Per-channel variances at every node, indexed by node id.
  std::vector<std::vector<double>> propagate(const OpGraph& graph) const;

 private:
  ProxyOptions options_;
};

ProxyScore entropy_score(const OpGraph& graph, const ProxyOptions& options = {});

nlohmann::json proxy_score_to_json(const ProxyScore& score);

}  // namespace detkit

#endif  // DETKIT_PROXY_H_
