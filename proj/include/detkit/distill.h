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

#ifndef DETKIT_DISTILL_H_
#define DETKIT_DISTILL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "detkit/tensor.h"

namespace detkit {

// Nearest-neighbour resize of the spatial dims.
Tensor4 nearest_resize(const Tensor4& input, int64_t h, int64_t w);

// Matches the student to `teacher_shape`: nearest resize when the spatial
// dims differ, then the 1x1 projection. Throws ShapeError when the
// projection cannot produce the teacher shape.
Tensor4 align_project(const Tensor4& student, const Shape4& teacher_shape,
                      const ConvParams& proj);

struct CwdOptions {
  double std_floor = 1e-3;
  // Multiply each channel's KL by its temperature squared.
  bool scale_by_t2 = true;
};

// Channel-wise distillation. Every (sample, channel) map is centred on its
// own mean; the temperature is the teacher map's std floored at
// `std_floor`; both maps go through a spatial softmax at that temperature;
// the loss is the mean over maps of T^2 * KL(teacher || student).
double cwd_loss(const Tensor4& teacher, const Tensor4& student,
                const CwdOptions& options = {});

class Distiller {
 public:
  virtual ~Distiller() = default;
  virtual std::string_view name() const = 0;
  // Shapes must already match.
  virtual double loss(const Tensor4& teacher, const Tensor4& student) const = 0;
};

class CwdDistiller : public Distiller {
 public:
  explicit CwdDistiller(CwdOptions options = {}) : options_(options) {}
  std::string_view name() const override { return "cwd"; }
  double loss(const Tensor4& teacher, const Tensor4& student) const override;

 private:
  CwdOptions options_;
};

// Feature mimicking: mean squared error.
class MimicDistiller : public Distiller {
 public:
  std::string_view name() const override { return "mimic"; }
  double loss(const Tensor4& teacher, const Tensor4& student) const override;
};

// Masked generative distillation: a seeded random spatial mask zeroes the
// student, an optional conv3x3-ReLU-conv3x3 generator rebuilds it, and the
// result is compared to the teacher by mean squared error. Without a
// generator the masked student is compared directly.
class MgdDistiller : public Distiller {
 public:
  struct Generator {
    ConvParams first;
    ConvParams second;
  };

  MgdDistiller(double mask_ratio, uint64_t seed,
               std::optional<Generator> generator = std::nullopt);
  std::string_view name() const override { return "mgd"; }
  double loss(const Tensor4& teacher, const Tensor4& student) const override;

 private:
  double mask_ratio_;
  uint64_t seed_;
  std::optional<Generator> generator_;
};

std::unique_ptr<Distiller> make_distiller(std::string_view name);

// Averages a distiller over pyramid levels with the given weights (equal
// when empty).
double multi_level_loss(const Distiller& distiller,
                        const std::vector<Tensor4>& teachers,
                        const std::vector<Tensor4>& students,
                        const std::vector<double>& weights = {});

enum class ScheduleMode { kCosine, kConstant };

struct DistillSchedule {
  int stage1_epochs = 284;
  int stage2_epochs = 16;
  double w_start = 0.5;
  double w_end = 0.0;
  ScheduleMode mode = ScheduleMode::kCosine;

  void validate() const;
};

// Stage 1 decays from w_start to w_end on a half cosine (or holds w_start in
// constant mode); stage 2 and beyond is 0.
double distill_weight(int epoch, const DistillSchedule& schedule = {});

}  // namespace detkit

#endif  // DETKIT_DISTILL_H_
