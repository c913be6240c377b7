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

#include "detkit/tensor_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "detkit/errors.h"

namespace detkit {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key,
                    const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(path.empty() ? key : path + "." + key,
                      "missing field");
  }
  return j.at(key);
}

std::vector<float> float_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  std::vector<float> out;
  out.reserve(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw SchemaError(path + "[" + std::to_string(i) + "]",
                        "expected a number");
    }
    out.push_back(j[i].get<float>());
  }
  return out;
}

int int_field(const json& j, const std::string& key, const std::string& path,
              int fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) {
    throw SchemaError(path + "." + key, "expected an integer");
  }
  return v.get<int>();
}

Shape4 shape_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4) {
    throw SchemaError(path, "expected [n, c, h, w]");
  }
  for (size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number_integer() || j[i].get<int64_t>() < 1) {
      throw SchemaError(path + "[" + std::to_string(i) + "]",
                        "expected a positive integer");
    }
  }
  return Shape4{j[0].get<int64_t>(), j[1].get<int64_t>(), j[2].get<int64_t>(),
                j[3].get<int64_t>()};
}

}  // namespace

json tensor_to_json(const Tensor4& t) {
  const Shape4& s = t.shape();
  return json{{"shape", {s.n, s.c, s.h, s.w}}, {"data", t.vec()}};
}

Tensor4 tensor_from_json(const json& j, const std::string& path) {
  Shape4 shape = shape_from_json(require(j, "shape", path), path + ".shape");
  std::vector<float> data = float_array(require(j, "data", path), path + ".data");
  if (static_cast<int64_t>(data.size()) != shape.numel()) {
    throw SchemaError(path + ".data", "length " + std::to_string(data.size()) +
                                          " does not match shape " +
                                          shape.str());
  }
  return Tensor4(shape, std::move(data));
}

json conv_params_to_json(const ConvParams& p) {
  return json{{"weight", tensor_to_json(p.weight)},
              {"bias", p.bias},
              {"stride", p.stride},
              {"padding", p.padding},
              {"groups", p.groups}};
}

ConvParams conv_params_from_json(const json& j, const std::string& path) {
  ConvParams p;
  p.weight = tensor_from_json(require(j, "weight", path), path + ".weight");
  if (j.contains("bias")) p.bias = float_array(j.at("bias"), path + ".bias");
  p.stride = int_field(j, "stride", path, 1);
  p.padding = int_field(j, "padding", path, 0);
  p.groups = int_field(j, "groups", path, 1);
  try {
    p.validate();
  } catch (const ShapeError& e) {
    throw SchemaError(path + "." + e.dim(), e.what());
  }
  return p;
}

json bn_params_to_json(const BnParams& bn) {
  return json{{"gamma", bn.gamma},
              {"beta", bn.beta},
              {"running_mean", bn.running_mean},
              {"running_var", bn.running_var},
              {"epsilon", bn.epsilon}};
}

BnParams bn_params_from_json(const json& j, const std::string& path) {
  BnParams bn;
  bn.gamma = float_array(require(j, "gamma", path), path + ".gamma");
  bn.beta = float_array(require(j, "beta", path), path + ".beta");
  bn.running_mean =
      float_array(require(j, "running_mean", path), path + ".running_mean");
  bn.running_var =
      float_array(require(j, "running_var", path), path + ".running_var");
  if (j.contains("epsilon")) {
    if (!j.at("epsilon").is_number()) {
      throw SchemaError(path + ".epsilon", "expected a number");
    }
    bn.epsilon = j.at("epsilon").get<double>();
  }
  try {
    bn.validate();
  } catch (const ShapeError& e) {
    throw SchemaError(path + "." + e.dim(), e.what());
  }
  return bn;
}

void write_raw_tensor(const std::string& path, const Tensor4& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  for (float v : t.data()) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap32(bits);
    }
    out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
  const Shape4& s = t.shape();
  std::ofstream side(path + ".json");
  if (!side) throw InputError("cannot open '" + path + ".json' for writing");
  side << json{{"shape", {s.n, s.c, s.h, s.w}},
               {"dtype", "float32"},
               {"byte_order", "little"}}
              .dump()
       << "\n";
}

Tensor4 read_raw_tensor(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw InputError("missing shape sidecar '" + path + ".json'");
  json meta;
  try {
    meta = json::parse(side);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ".json", e.what());
  }
  const Shape4 shape = shape_from_json(require(meta, "shape", ""), "shape");
  if (meta.value("dtype", "float32") != "float32") {
    throw SchemaError("dtype", "only float32 is supported");
  }
  if (meta.value("byte_order", "little") != "little") {
    throw SchemaError("byte_order", "only little-endian is supported");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (static_cast<int64_t>(bytes.size()) != shape.numel() * 4) {
    throw ShapeError("data", "file has " + std::to_string(bytes.size()) +
                                 " bytes, shape " + shape.str() + " needs " +
                                 std::to_string(shape.numel() * 4));
  }
  std::vector<float> data(static_cast<size_t>(shape.numel()));
  for (size_t i = 0; i < data.size(); ++i) {
    uint32_t bits;
    std::memcpy(&bits, bytes.data() + i * 4, sizeof(bits));
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap32(bits);
    }
    std::memcpy(&data[i], &bits, sizeof(bits));
  }
  return Tensor4(shape, std::move(data));
}

}  // namespace detkit
