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

#ifndef DETKIT_COST_MODEL_H_
#define DETKIT_COST_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "detkit/graph.h"

namespace detkit {

struct CostOptions {
  // Also charge BatchNorm (2 per element) and activations (1 per element).
  bool strict = false;
};

struct NodeCost {
  int node = -1;
  std::string name;
  OpKind kind = OpKind::kIdentity;
  Section section = Section::kOther;
  uint64_t flops = 0;
  uint64_t params = 0;
  uint64_t bytes = 0;
  double latency_ms = 0.0;
};

// FLOPs count multiply and add separately (2 per MAC). Totals always equal
// the sum of the per-node entries.
struct CostReport {
  uint64_t flops = 0;
  uint64_t params = 0;
  uint64_t bytes = 0;
  double latency_ms = 0.0;
  std::string profile;
  std::vector<NodeCost> per_node;

  uint64_t section_flops(Section s) const;
  uint64_t section_params(Section s) const;
};

// Roofline-style device: a node costs max(flops / flops_per_ms,
// bytes / bytes_per_ms) plus a fixed per-op launch overhead.
struct DeviceProfile {
  std::string name;
  double flops_per_ms = 1.0;
  double bytes_per_ms = 1.0;
  double per_op_overhead_ms = 0.0;

  void validate() const;

  // Illustrative coefficients, not measurements.
  static DeviceProfile t4_like();
  static DeviceProfile x86_like();
};

uint64_t node_flops(const OpGraph& graph, const OpNode& node,
                    const CostOptions& options = {});
uint64_t node_params(const OpNode& node);
// float32 traffic: inputs + output + parameters.
uint64_t node_bytes(const OpGraph& graph, const OpNode& node);

// FLOPs, params and bytes per node; latency fields are left at zero.
CostReport count_costs(const OpGraph& graph, const CostOptions& options = {});
uint64_t count_flops(const OpGraph& graph, const CostOptions& options = {});
uint64_t count_params(const OpGraph& graph);

// Σ_nodes max(flops/flops_per_ms, bytes/bytes_per_ms) + overhead * |nodes|.
double estimate_latency(const CostReport& report, const DeviceProfile& profile);

// count_costs plus per-node and total latency under `profile`.
CostReport evaluate_cost(const OpGraph& graph, const DeviceProfile& profile,
                         const CostOptions& options = {});

nlohmann::json cost_report_to_json(const CostReport& report,
                                   bool include_nodes = true);
// Aligned text table of the per-node breakdown followed by totals.
std::string format_cost_table(const CostReport& report);

nlohmann::json profile_to_json(const DeviceProfile& profile);
DeviceProfile profile_from_json(const nlohmann::json& doc);
// Accepts a path to a profile JSON file or a built-in name
// ("t4-like", "x86-like").
DeviceProfile load_profile(const std::string& path_or_name);

}  // namespace detkit

#endif  // DETKIT_COST_MODEL_H_
