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

#include "detkit/genome_json.h"

#include <fstream>
#include <sstream>

#include "detkit/errors.h"

namespace detkit {

using nlohmann::json;

namespace {

const json& field(const json& obj, const std::string& key,
                  const std::string& path) {
  const std::string full = path.empty() ? key : path + "." + key;
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  if (!obj.contains(key)) throw SchemaError(full, "missing field");
  return obj.at(key);
}

int get_int(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number_integer()) {
    throw SchemaError(path.empty() ? key : path + "." + key,
                      "expected an integer");
  }
  return v.get<int>();
}

int get_int_or(const json& obj, const std::string& key,
               const std::string& path, int fallback) {
  return obj.contains(key) ? get_int(obj, key, path) : fallback;
}

double get_double_or(const json& obj, const std::string& key,
                     const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw SchemaError(path + "." + key, "expected a number");
  return v.get<double>();
}

bool get_bool_or(const json& obj, const std::string& key,
                 const std::string& path, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw SchemaError(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& key,
                       const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) {
    throw SchemaError(path.empty() ? key : path + "." + key,
                      "expected a string");
  }
  return v.get<std::string>();
}

BlockSpec block_from_json(const json& j, const std::string& path) {
  BlockSpec b;
  try {
    b.kind = block_kind_from_string(get_string(j, "kind", path));
  } catch (const SchemaError&) {
    throw;
  } catch (const InputError& e) {
    throw SchemaError(path + ".kind", e.what());
  }
  b.in_ch = get_int(j, "in_ch", path);
  b.out_ch = get_int(j, "out_ch", path);
  b.stride = get_int_or(j, "stride", path, 1);
  b.depth = get_int_or(j, "depth", path, 1);
  b.kernel = get_int_or(j, "kernel", path, 3);
  b.hidden_ratio = get_double_or(j, "hidden_ratio", path, 0.5);
  return b;
}

NeckConfig neck_from_json(const json& j) {
  NeckConfig n;
  n.depth = get_int(j, "depth", "neck");
  const json& widths = field(j, "widths", "neck");
  if (!widths.is_array() || widths.size() != 3) {
    throw SchemaError("neck.widths", "expected three integers");
  }
  for (size_t i = 0; i < 3; ++i) {
    if (!widths[i].is_number_integer()) {
      throw SchemaError("neck.widths[" + std::to_string(i) + "]",
                        "expected an integer");
    }
    n.widths[i] = widths[i].get<int>();
  }
  if (j.contains("fusion_style")) {
    try {
      n.fusion_style =
          fusion_style_from_string(get_string(j, "fusion_style", "neck"));
    } catch (const SchemaError&) {
      throw;
    } catch (const InputError& e) {
      throw SchemaError("neck.fusion_style", e.what());
    }
  }
  n.extra_upsample = get_bool_or(j, "extra_upsample", "neck", false);
  n.extra_downsample = get_bool_or(j, "extra_downsample", "neck", true);
  n.hidden_ratio = get_double_or(j, "hidden_ratio", "neck", 0.5);
  return n;
}

}  // namespace

json genome_to_json(const DetectorGenome& g) {
  json backbone = json::array();
  for (const BlockSpec& b : g.backbone) {
    backbone.push_back({{"kind", std::string(to_string(b.kind))},
                        {"in_ch", b.in_ch},
                        {"out_ch", b.out_ch},
                        {"stride", b.stride},
                        {"depth", b.depth},
                        {"kernel", b.kernel},
                        {"hidden_ratio", b.hidden_ratio}});
  }
  json doc = {{"schema_version", kGenomeSchemaVersion},
              {"name", g.name},
              {"label", g.label},
              {"input_res", {g.input_h, g.input_w}},
              {"input_channels", g.input_channels},
              {"num_classes", g.num_classes},
              {"backbone", backbone}};
  if (g.neck) {
    const NeckConfig& n = *g.neck;
    doc["neck"] = {{"depth", n.depth},
                   {"widths", n.widths},
                   {"fusion_style", std::string(to_string(n.fusion_style))},
                   {"extra_upsample", n.extra_upsample},
                   {"extra_downsample", n.extra_downsample},
                   {"hidden_ratio", n.hidden_ratio}};
  }
  if (g.head) {
    doc["head"] = {{"head_depth", g.head->head_depth},
                   {"reg_bins", g.head->reg_bins}};
  }
  return doc;
}

DetectorGenome genome_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("", "genome must be a JSON object");
  const int version = get_int(doc, "schema_version", "");
  if (version != kGenomeSchemaVersion) {
    throw SchemaError("schema_version",
                      "unsupported version " + std::to_string(version));
  }
  DetectorGenome g;
  if (doc.contains("name")) g.name = get_string(doc, "name", "");
  if (doc.contains("label")) g.label = get_string(doc, "label", "");
  const json& res = field(doc, "input_res", "");
  if (!res.is_array() || res.size() != 2 || !res[0].is_number_integer() ||
      !res[1].is_number_integer()) {
    throw SchemaError("input_res", "expected [height, width]");
  }
  g.input_h = res[0].get<int>();
  g.input_w = res[1].get<int>();
  g.input_channels = get_int_or(doc, "input_channels", "", 3);
  g.num_classes = get_int(doc, "num_classes", "");

  const json& backbone = field(doc, "backbone", "");
  if (!backbone.is_array()) throw SchemaError("backbone", "expected an array");
  for (size_t i = 0; i < backbone.size(); ++i) {
    g.backbone.push_back(
        block_from_json(backbone[i], "backbone[" + std::to_string(i) + "]"));
  }
  if (doc.contains("neck") && !doc.at("neck").is_null()) {
    g.neck = neck_from_json(doc.at("neck"));
  }
  if (doc.contains("head") && !doc.at("head").is_null()) {
    HeadConfig h;
    h.head_depth = get_int(doc.at("head"), "head_depth", "head");
    h.reg_bins = get_int_or(doc.at("head"), "reg_bins", "head", 16);
    g.head = h;
  }
  validate(g);
  return g;
}

std::string genome_to_json_text(const DetectorGenome& genome) {
  return genome_to_json(genome).dump(2) + "\n";
}

DetectorGenome genome_from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("malformed JSON: ") + e.what());
  }
  return genome_from_json(doc);
}

DetectorGenome load_genome_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open genome file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return genome_from_json_text(buf.str());
}

}  // namespace detkit
