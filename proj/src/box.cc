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

#include "detkit/box.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "detkit/errors.h"

namespace detkit {

void validate_box(const Box& b, const char* what) {
  if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) ||
      !std::isfinite(b.y2)) {
    throw InputError(std::string(what) + ": non-finite coordinate");
  }
  if (b.x2 < b.x1 || b.y2 < b.y1) {
    throw InputError(std::string(what) + ": inverted corners");
  }
}

double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return w > 0.0 && h > 0.0 ? w * h : 0.0;
}

Box hull(const Box& a, const Box& b) {
  return Box{std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
             std::max(a.y2, b.y2)};
}

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Box box_from_json(const nlohmann::json& doc, const std::string& path) {
  if (!doc.is_array() || doc.size() != 4) {
    throw SchemaError(path, "expected [x1, y1, x2, y2]");
  }
  for (const nlohmann::json& v : doc) {
    if (!v.is_number()) throw SchemaError(path, "coordinates must be numbers");
  }
  Box b{doc[0].get<double>(), doc[1].get<double>(), doc[2].get<double>(),
        doc[3].get<double>()};
  try {
    validate_box(b, path.c_str());
  } catch (const InputError& e) {
    throw SchemaError(path, e.what());
  }
  return b;
}

nlohmann::json box_to_json(const Box& b) {
  return nlohmann::json::array({b.x1, b.y1, b.x2, b.y2});
}

}  // namespace detkit
