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

#ifndef DETKIT_BOX_H_
#define DETKIT_BOX_H_

#include <string>

#include "json.hpp"

namespace detkit {

// Axis-aligned box in pixel coordinates, corners (x1, y1) and (x2, y2).
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const {
    return x >= x1 && x <= x2 && y >= y1 && y <= y2;
  }
  bool operator==(const Box&) const = default;
};

// Throws InputError naming `what` when a corner is not finite or inverted.
void validate_box(const Box& box, const char* what = "box");

double intersection_area(const Box& a, const Box& b);
// Smallest box enclosing both.
Box hull(const Box& a, const Box& b);
// Zero when the union is degenerate.
double iou(const Box& a, const Box& b);

Box box_from_json(const nlohmann::json& doc, const std::string& path);
nlohmann::json box_to_json(const Box& box);

}  // namespace detkit

#endif  // DETKIT_BOX_H_
