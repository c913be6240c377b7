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

#ifndef DETKIT_LOSSES_H_
#define DETKIT_LOSSES_H_

#include <array>
#include <span>
#include <vector>

#include "detkit/box.h"

namespace detkit {

// Quality focal loss: |q - p|^beta * BCE(p, q), logs clamped at 1e-12.
double qfl(double pred_prob, double target_q, double beta = 2.0);
// d qfl / d pred_prob.
double qfl_grad(double pred_prob, double target_q, double beta = 2.0);

// Distribution focal loss on the two bins around `target`. `probs` must sum
// to 1 within 1e-6 and target must lie in [0, bins - 1].
double dfl(std::span<const double> probs, double target);
// d dfl / d probs; non-zero only on the two neighbouring bins.
std::vector<double> dfl_grad(std::span<const double> probs, double target);

// Generalized IoU in [-1, 1].
double giou(const Box& pred, const Box& gt);
// 1 - giou, in [0, 2].
double giou_loss(const Box& pred, const Box& gt);
// d giou_loss / d (x1, y1, x2, y2) of the prediction, one-sided at kinks.
std::array<double, 4> giou_loss_grad(const Box& pred, const Box& gt);

struct LossWeights {
  double qfl = 1.0;
  double dfl = 0.25;
  double giou = 2.0;

  // Throws InputError on a negative weight or when all are zero.
  void validate() const;
};

struct LossComponents {
  double qfl = 0.0;
  double dfl = 0.0;
  double giou = 0.0;
};

// Weighted sum of the three detection terms. Throws InputError on a
// negative component.
double total_loss(const LossComponents& components, const LossWeights& weights);

struct LossBreakdown {
  double qfl = 0.0;
  double dfl = 0.0;
  double giou = 0.0;
  double distill = 0.0;
  double distill_weight = 0.0;
  double total = 0.0;
};

// total_loss plus distill * distill_weight.
LossBreakdown compose_loss(const LossComponents& components,
                           const LossWeights& weights, double distill = 0.0,
                           double distill_weight = 0.0);

}  // namespace detkit

#endif  // DETKIT_LOSSES_H_
