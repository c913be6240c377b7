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

#ifndef DETKIT_TENSOR_IO_H_
#define DETKIT_TENSOR_IO_H_

#include <string>

#include "json.hpp"

#include "detkit/tensor.h"

namespace detkit {

// {"shape": [n, c, h, w], "data": [...]}
nlohmann::json tensor_to_json(const Tensor4& t);
Tensor4 tensor_from_json(const nlohmann::json& j, const std::string& path);

// {"weight": tensor, "bias": [...], "stride": s, "padding": p, "groups": g}
nlohmann::json conv_params_to_json(const ConvParams& p);
ConvParams conv_params_from_json(const nlohmann::json& j,
                                 const std::string& path);

// {"gamma": [...], "beta": [...], "running_mean": [...],
//  "running_var": [...], "epsilon": e}
nlohmann::json bn_params_to_json(const BnParams& bn);
BnParams bn_params_from_json(const nlohmann::json& j, const std::string& path);

// Raw feature-map files: `path` holds little-endian float32 values in NCHW
// order and `path + ".json"` holds {"shape": [n, c, h, w], "dtype":
// "float32", "byte_order": "little"}.
void write_raw_tensor(const std::string& path, const Tensor4& t);
Tensor4 read_raw_tensor(const std::string& path);

}  // namespace detkit

#endif  // DETKIT_TENSOR_IO_H_
