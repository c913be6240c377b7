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

#include "detkit/cost_model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "detkit/errors.h"

namespace detkit {

using nlohmann::json;

uint64_t CostReport::section_flops(Section s) const {
  uint64_t total = 0;
  for (const NodeCost& n : per_node) {
    if (n.section == s) total += n.flops;
  }
  return total;
}

uint64_t CostReport::section_params(Section s) const {
  uint64_t total = 0;
  for (const NodeCost& n : per_node) {
    if (n.section == s) total += n.params;
  }
  return total;
}

void DeviceProfile::validate() const {
  if (!(flops_per_ms > 0.0) || !std::isfinite(flops_per_ms)) {
    throw SchemaError("flops_per_ms", "must be a positive number");
  }
  if (!(bytes_per_ms > 0.0) || !std::isfinite(bytes_per_ms)) {
    throw SchemaError("bytes_per_ms", "must be a positive number");
  }
  if (!(per_op_overhead_ms >= 0.0) || !std::isfinite(per_op_overhead_ms)) {
    throw SchemaError("per_op_overhead_ms", "must be non-negative");
  }
}

DeviceProfile DeviceProfile::t4_like() {
  return DeviceProfile{"t4-like", 1.35e10, 3.2e8, 0.002};
}

DeviceProfile DeviceProfile::x86_like() {
  return DeviceProfile{"x86-like", 1.0e9, 4.0e7, 0.005};
}

uint64_t node_flops(const OpGraph& graph, const OpNode& n,
                    const CostOptions& options) {
  const uint64_t out = static_cast<uint64_t>(n.out.numel());
  const uint64_t act = options.strict && n.act != "none" ? out : 0;
  switch (n.kind) {
    case OpKind::kConv: {
      const uint64_t k2 = static_cast<uint64_t>(n.kernel) *
                          static_cast<uint64_t>(n.kernel);
      const uint64_t fan_in = static_cast<uint64_t>(n.in_ch / n.groups);
      return 2 * k2 * fan_in * out + act;
    }
    case OpKind::kBatchNorm:
      return options.strict ? 2 * out : 0;
    case OpKind::kAdd:
      return (n.inputs.size() - 1) * out + act;
    case OpKind::kConcat:
    case OpKind::kUpsample:
    case OpKind::kSpaceToDepth:
      return out;
    case OpKind::kMaxPool:
      return out * static_cast<uint64_t>(n.kernel) *
             static_cast<uint64_t>(n.kernel);
    case OpKind::kIdentity:
      return 0;
  }
  (void)graph;
  return 0;
}

uint64_t node_params(const OpNode& n) {
  switch (n.kind) {
    case OpKind::kConv: {
      const uint64_t k2 = static_cast<uint64_t>(n.kernel) *
                          static_cast<uint64_t>(n.kernel);
      const uint64_t out_ch = static_cast<uint64_t>(n.out.c);
      return k2 * static_cast<uint64_t>(n.in_ch / n.groups) * out_ch +
             (n.bias ? out_ch : 0);
    }
    case OpKind::kBatchNorm:
      return 2 * static_cast<uint64_t>(n.out.c);
    default:
      return 0;
  }
}

uint64_t node_bytes(const OpGraph& graph, const OpNode& n) {
  uint64_t elems = static_cast<uint64_t>(n.out.numel()) + node_params(n);
  for (int src : n.inputs) {
    elems += static_cast<uint64_t>(graph.shape_of(src).numel());
  }
  return 4 * elems;
}

CostReport count_costs(const OpGraph& graph, const CostOptions& options) {
  CostReport r;
  r.per_node.reserve(graph.size());
  for (const OpNode& n : graph.nodes()) {
    NodeCost c;
    c.node = n.id;
    c.name = n.name;
    c.kind = n.kind;
    c.section = n.section;
    c.flops = node_flops(graph, n, options);
    c.params = node_params(n);
    c.bytes = node_bytes(graph, n);
    r.flops += c.flops;
    r.params += c.params;
    r.bytes += c.bytes;
    r.per_node.push_back(std::move(c));
  }
  return r;
}

uint64_t count_flops(const OpGraph& graph, const CostOptions& options) {
  uint64_t total = 0;
  for (const OpNode& n : graph.nodes()) total += node_flops(graph, n, options);
  return total;
}

uint64_t count_params(const OpGraph& graph) {
  uint64_t total = 0;
  for (const OpNode& n : graph.nodes()) total += node_params(n);
  return total;
}

namespace {

double node_latency(const NodeCost& n, const DeviceProfile& p) {
  return std::max(static_cast<double>(n.flops) / p.flops_per_ms,
                  static_cast<double>(n.bytes) / p.bytes_per_ms) +
         p.per_op_overhead_ms;
}

}  // namespace

double estimate_latency(const CostReport& report,
                        const DeviceProfile& profile) {
  profile.validate();
  double total = 0.0;
  for (const NodeCost& n : report.per_node) total += node_latency(n, profile);
  return total;
}

CostReport evaluate_cost(const OpGraph& graph, const DeviceProfile& profile,
                         const CostOptions& options) {
  profile.validate();
  CostReport r = count_costs(graph, options);
  r.profile = profile.name;
  r.latency_ms = 0.0;
  for (NodeCost& n : r.per_node) {
    n.latency_ms = node_latency(n, profile);
    r.latency_ms += n.latency_ms;
  }
  return r;
}

json cost_report_to_json(const CostReport& r, bool include_nodes) {
  json j = {{"flops", r.flops},
            {"gflops", static_cast<double>(r.flops) / 1e9},
            {"params", r.params},
            {"params_m", static_cast<double>(r.params) / 1e6},
            {"bytes", r.bytes},
            {"latency_ms", r.latency_ms},
            {"profile", r.profile},
            {"sections",
             {{"backbone",
               {{"flops", r.section_flops(Section::kBackbone)},
                {"params", r.section_params(Section::kBackbone)}}},
              {"neck",
               {{"flops", r.section_flops(Section::kNeck)},
                {"params", r.section_params(Section::kNeck)}}},
              {"head",
               {{"flops", r.section_flops(Section::kHead)},
                {"params", r.section_params(Section::kHead)}}}}}};
  if (include_nodes) {
    json nodes = json::array();
    for (const NodeCost& n : r.per_node) {
      nodes.push_back({{"id", n.node},
                       {"name", n.name},
                       {"kind", std::string(to_string(n.kind))},
                       {"section", std::string(to_string(n.section))},
                       {"flops", n.flops},
                       {"params", n.params},
                       {"bytes", n.bytes},
                       {"latency_ms", n.latency_ms}});
    }
    j["per_node"] = std::move(nodes);
  }
  return j;
}

std::string format_cost_table(const CostReport& r) {
  size_t name_w = 4;
  for (const NodeCost& n : r.per_node) name_w = std::max(name_w, n.name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w)) << "node" << "  "
     << std::setw(12) << "kind" << std::right << std::setw(16) << "flops"
     << std::setw(12) << "params" << std::setw(12) << "latency_ms" << "\n";
  for (const NodeCost& n : r.per_node) {
    os << std::left << std::setw(static_cast<int>(name_w)) << n.name << "  "
       << std::setw(12) << to_string(n.kind) << std::right << std::setw(16)
       << n.flops << std::setw(12) << n.params << std::setw(12) << std::fixed
       << std::setprecision(5) << n.latency_ms << "\n";
  }
  os << std::left << std::setw(static_cast<int>(name_w)) << "TOTAL" << "  "
     << std::setw(12) << "" << std::right << std::setw(16) << r.flops
     << std::setw(12) << r.params << std::setw(12) << std::fixed
     << std::setprecision(5) << r.latency_ms << "\n";
  os << std::setprecision(3) << "GFLOPs " << static_cast<double>(r.flops) / 1e9
     << "  Params(M) " << static_cast<double>(r.params) / 1e6
     << "  Latency(ms) " << r.latency_ms;
  if (!r.profile.empty()) os << " [" << r.profile << "]";
  os << "\n";
  return os.str();
}

json profile_to_json(const DeviceProfile& p) {
  return json{{"name", p.name},
              {"flops_per_ms", p.flops_per_ms},
              {"bytes_per_ms", p.bytes_per_ms},
              {"per_op_overhead_ms", p.per_op_overhead_ms}};
}

DeviceProfile profile_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("", "profile must be an object");
  DeviceProfile p;
  auto num = [&](const char* key) {
    if (!doc.contains(key)) throw SchemaError(key, "missing field");
    if (!doc.at(key).is_number()) throw SchemaError(key, "expected a number");
    return doc.at(key).get<double>();
  };
  if (!doc.contains("name") || !doc.at("name").is_string()) {
    throw SchemaError("name", "expected a string");
  }
  p.name = doc.at("name").get<std::string>();
  p.flops_per_ms = num("flops_per_ms");
  p.bytes_per_ms = num("bytes_per_ms");
  p.per_op_overhead_ms = num("per_op_overhead_ms");
  p.validate();
  return p;
}

DeviceProfile load_profile(const std::string& path_or_name) {
  if (path_or_name == "t4-like") return DeviceProfile::t4_like();
  if (path_or_name == "x86-like") return DeviceProfile::x86_like();
  std::ifstream in(path_or_name);
  if (!in) throw InputError("cannot open profile '" + path_or_name + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("malformed profile JSON: ") + e.what());
  }
  return profile_from_json(doc);
}

}  // namespace detkit
