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

#include "detkit/proxy.h"

#include <cmath>
#include <numbers>

#include "detkit/errors.h"

namespace detkit {

std::vector<std::vector<double>> EntropyProxy::propagate(
    const OpGraph& graph) const {
  if (!(options_.input_variance > 0.0)) {
    throw InputError("input_variance must be positive");
  }
  const std::vector<double> input(static_cast<size_t>(graph.input_shape().c),
                                  options_.input_variance);
  std::vector<std::vector<double>> var(graph.size());
  auto of = [&](int id) -> const std::vector<double>& {
    return id == kGraphInput ? input : var[static_cast<size_t>(id)];
  };

  for (int id : graph.topological_order()) {
    const OpNode& n = graph.node(id);
    std::vector<double>& out = var[static_cast<size_t>(id)];
    switch (n.kind) {
      case OpKind::kConv: {
        const std::vector<double>& in = of(n.inputs[0]);
        const size_t in_per_group = in.size() / static_cast<size_t>(n.groups);
        const size_t out_per_group =
            static_cast<size_t>(n.out.c) / static_cast<size_t>(n.groups);
        out.resize(static_cast<size_t>(n.out.c));
        for (size_t g = 0; g < static_cast<size_t>(n.groups); ++g) {
          double sum = 0.0;
          for (size_t i = 0; i < in_per_group; ++i) sum += in[g * in_per_group + i];
          const double mean = sum / static_cast<double>(in_per_group);
          for (size_t o = 0; o < out_per_group; ++o) out[g * out_per_group + o] = mean;
        }
        break;
      }
      case OpKind::kAdd: {
        out.assign(static_cast<size_t>(n.out.c), 0.0);
        for (int src : n.inputs) {
          const std::vector<double>& in = of(src);
          for (size_t c = 0; c < out.size(); ++c) out[c] += in[c];
        }
        break;
      }
      case OpKind::kConcat:
        for (int src : n.inputs) {
          const std::vector<double>& in = of(src);
          out.insert(out.end(), in.begin(), in.end());
        }
        break;
      case OpKind::kSpaceToDepth: {
        const std::vector<double>& in = of(n.inputs[0]);
        for (int slice = 0; slice < 4; ++slice) {
          out.insert(out.end(), in.begin(), in.end());
        }
        break;
      }
      case OpKind::kBatchNorm:
      case OpKind::kUpsample:
      case OpKind::kMaxPool:
      case OpKind::kIdentity:
        out = of(n.inputs[0]);
        break;
    }
  }
  return var;
}

ProxyScore EntropyProxy::score(const OpGraph& graph) const {
  std::vector<int> scored;
  if (!graph.pyramid().empty()) {
    for (const PyramidLevel& p : graph.pyramid()) scored.push_back(p.node);
  } else {
    scored = graph.outputs();
  }
  if (scored.empty()) throw InputError("graph has no scale to score");
  if (!options_.scale_weights.empty() &&
      options_.scale_weights.size() != scored.size()) {
    throw InputError("scale_weights has " +
                     std::to_string(options_.scale_weights.size()) +
                     " entries for " + std::to_string(scored.size()) +
                     " scored scales");
  }

  const std::vector<std::vector<double>> var = propagate(graph);
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  ProxyScore s;
  for (size_t i = 0; i < scored.size(); ++i) {
    const OpNode& n = graph.node(scored[i]);
    const int64_t spatial = n.out.h * n.out.w;
    if (spatial * n.out.c == 0) {
      throw InputError(n.name + ": zero-element output cannot be scored");
    }
    double per_position = 0.0;
    for (double v : var[static_cast<size_t>(n.id)]) {
      per_position += 0.5 * std::log(two_pi_e * v);
    }
    const double w = options_.scale_weights.empty() ? 1.0 : options_.scale_weights[i];
    s.per_scale.push_back(w * static_cast<double>(spatial) * per_position);
  }
  for (double c : s.per_scale) s.value += c;
  return s;
}

ProxyScore entropy_score(const OpGraph& graph, const ProxyOptions& options) {
  return EntropyProxy(options).score(graph);
}

nlohmann::json proxy_score_to_json(const ProxyScore& score) {
  return nlohmann::json{{"value", score.value}, {"per_scale", score.per_scale}};
}

}  // namespace detkit
