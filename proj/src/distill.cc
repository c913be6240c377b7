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

#include "detkit/distill.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "detkit/errors.h"

namespace detkit {
namespace {

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(what, "teacher " + a.shape().str() + " vs student " +
                               b.shape().str());
  }
}

double mse(const Tensor4& a, const Tensor4& b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.vec().size(); ++i) {
    const double d = static_cast<double>(a.vec()[i]) - b.vec()[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.vec().size());
}

Tensor4 relu(Tensor4 t) {
  for (float& v : t.data()) v = std::max(v, 0.0f);
  return t;
}

}  // namespace

Tensor4 nearest_resize(const Tensor4& in, int64_t h, int64_t w) {
  const Shape4& s = in.shape();
  if (h <= 0 || w <= 0) throw ShapeError("resize", "target dims must be positive");
  if (s.h == h && s.w == w) return in;
  Tensor4 out(Shape4{s.n, s.c, h, w});
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      for (int64_t y = 0; y < h; ++y) {
        const int64_t sy = y * s.h / h;
        for (int64_t x = 0; x < w; ++x) {
          out.at(n, c, y, x) = in.at(n, c, sy, x * s.w / w);
        }
      }
    }
  }
  return out;
}

Tensor4 align_project(const Tensor4& student, const Shape4& teacher_shape,
                      const ConvParams& proj) {
  proj.validate();
  const Shape4& s = student.shape();
  if (s.n != teacher_shape.n) throw ShapeError("n", "batch sizes differ");
  if (proj.kernel_h() != 1 || proj.kernel_w() != 1 || proj.stride != 1 ||
      proj.padding != 0 || proj.groups != 1) {
    throw ShapeError("proj", "projection must be a plain 1x1 conv");
  }
  if (proj.in_channels() != s.c) {
    throw ShapeError("c", "projection expects " + std::to_string(proj.in_channels()) +
                              " input channels, student has " + std::to_string(s.c));
  }
  if (proj.out_channels() != teacher_shape.c) {
    throw ShapeError("c", "projection yields " + std::to_string(proj.out_channels()) +
                              " channels, teacher has " +
                              std::to_string(teacher_shape.c));
  }
  return conv2d_forward(nearest_resize(student, teacher_shape.h, teacher_shape.w),
                        proj);
}

double cwd_loss(const Tensor4& teacher, const Tensor4& student,
                const CwdOptions& options) {
  require_same_shape(teacher, student, "cwd");
  if (!(options.std_floor > 0.0)) throw InputError("std_floor must be positive");
  const Shape4& s = teacher.shape();
  const int64_t hw = s.h * s.w;
  std::vector<double> t(static_cast<size_t>(hw)), u(static_cast<size_t>(hw));
  double total = 0.0;
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      const size_t base = static_cast<size_t>(teacher.index(n, c, 0, 0));
      double tm = 0.0, um = 0.0;
      for (int64_t i = 0; i < hw; ++i) {
        tm += teacher.vec()[base + static_cast<size_t>(i)];
        um += student.vec()[base + static_cast<size_t>(i)];
      }
      tm /= static_cast<double>(hw);
      um /= static_cast<double>(hw);
      double var = 0.0;
      for (int64_t i = 0; i < hw; ++i) {
        const double d = teacher.vec()[base + static_cast<size_t>(i)] - tm;
        var += d * d;
      }
      const double temp =
          std::max(std::sqrt(var / static_cast<double>(hw)), options.std_floor);
      for (int64_t i = 0; i < hw; ++i) {
        t[static_cast<size_t>(i)] = (teacher.vec()[base + static_cast<size_t>(i)] - tm) / temp;
        u[static_cast<size_t>(i)] = (student.vec()[base + static_cast<size_t>(i)] - um) / temp;
      }
      // Log-softmax of both maps.
      auto log_normalize = [](std::vector<double>& v) {
        const double mx = *std::max_element(v.begin(), v.end());
        double z = 0.0;
        for (double x : v) z += std::exp(x - mx);
        const double lz = mx + std::log(z);
        for (double& x : v) x -= lz;
      };
      log_normalize(t);
      log_normalize(u);
      double kl = 0.0;
      for (size_t i = 0; i < t.size(); ++i) kl += std::exp(t[i]) * (t[i] - u[i]);
      kl = std::max(kl, 0.0);
      total += options.scale_by_t2 ? temp * temp * kl : kl;
    }
  }
  return total / static_cast<double>(s.n * s.c);
}

double CwdDistiller::loss(const Tensor4& teacher, const Tensor4& student) const {
  return cwd_loss(teacher, student, options_);
}

double MimicDistiller::loss(const Tensor4& teacher, const Tensor4& student) const {
  require_same_shape(teacher, student, "mimic");
  return mse(teacher, student);
}

MgdDistiller::MgdDistiller(double mask_ratio, uint64_t seed,
                           std::optional<Generator> generator)
    : mask_ratio_(mask_ratio), seed_(seed), generator_(std::move(generator)) {
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) {
    throw InputError("mask_ratio must lie in [0, 1)");
  }
}

double MgdDistiller::loss(const Tensor4& teacher, const Tensor4& student) const {
  require_same_shape(teacher, student, "mgd");
  const Shape4& s = student.shape();
  Tensor4 masked = student;
  std::mt19937_64 rng(seed_);
  std::bernoulli_distribution drop(mask_ratio_);
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t y = 0; y < s.h; ++y) {
      for (int64_t x = 0; x < s.w; ++x) {
        if (!drop(rng)) continue;
        for (int64_t c = 0; c < s.c; ++c) masked.at(n, c, y, x) = 0.0f;
      }
    }
  }
  if (generator_) {
    masked = conv2d_forward(relu(conv2d_forward(masked, generator_->first)),
                            generator_->second);
    require_same_shape(teacher, masked, "mgd.generator");
  }
  return mse(teacher, masked);
}

std::unique_ptr<Distiller> make_distiller(std::string_view name) {
  if (name == "cwd") return std::make_unique<CwdDistiller>();
  if (name == "mimic") return std::make_unique<MimicDistiller>();
  if (name == "mgd") return std::make_unique<MgdDistiller>(0.5, 0);
  throw InputError("unknown distiller '" + std::string(name) + "'");
}

double multi_level_loss(const Distiller& distiller,
                        const std::vector<Tensor4>& teachers,
                        const std::vector<Tensor4>& students,
                        const std::vector<double>& weights) {
  if (teachers.size() != students.size() || teachers.empty()) {
    throw InputError("need one student per teacher level");
  }
  if (!weights.empty() && weights.size() != teachers.size()) {
    throw InputError("need one weight per level");
  }
  double sum = 0.0, wsum = 0.0;
  for (size_t i = 0; i < teachers.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w < 0.0) throw InputError("level weights must be non-negative");
    sum += w * distiller.loss(teachers[i], students[i]);
    wsum += w;
  }
  if (wsum <= 0.0) throw InputError("level weights sum to zero");
  return sum / wsum;
}

void DistillSchedule::validate() const {
  if (stage1_epochs <= 0 || stage2_epochs <= 0) {
    throw InputError("stage durations must be positive");
  }
  if (w_start < 0.0 || w_end < 0.0 || w_end > w_start) {
    throw InputError("need 0 <= w_end <= w_start");
  }
}

double distill_weight(int epoch, const DistillSchedule& s) {
  s.validate();
  if (epoch < 0) throw InputError("epoch must be non-negative");
  if (epoch >= s.stage1_epochs) return 0.0;
  if (s.mode == ScheduleMode::kConstant) return s.w_start;
  const double phase = std::numbers::pi * epoch / s.stage1_epochs;
  return s.w_end + 0.5 * (s.w_start - s.w_end) * (1.0 + std::cos(phase));
}

}  // namespace detkit
