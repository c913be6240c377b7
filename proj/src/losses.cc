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

#include "detkit/losses.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "detkit/errors.h"

namespace detkit {
namespace {

constexpr double kLogClamp = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kLogClamp, 1.0 - kLogClamp); }

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw InputError(std::string(what) + " must lie in [0, 1]");
  }
}

void check_dfl(std::span<const double> probs, double target) {
  if (probs.size() < 2) throw InputError("dfl needs at least two bins");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw InputError("dfl probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InputError("dfl probabilities must sum to 1");
  const double top = static_cast<double>(probs.size() - 1);
  if (!(target >= 0.0 && target <= top)) {
    throw InputError("dfl target outside [0, bins - 1]");
  }
}

}  // namespace

double qfl(double p, double q, double beta) {
  check_unit(p, "qfl prediction");
  check_unit(q, "qfl target");
  const double pc = clamp_prob(p);
  const double bce = -(q * std::log(pc) + (1.0 - q) * std::log(1.0 - pc));
  return std::pow(std::abs(q - p), beta) * bce;
}

double qfl_grad(double p, double q, double beta) {
  check_unit(p, "qfl prediction");
  check_unit(q, "qfl target");
  const double pc = clamp_prob(p);
  const double gap = std::abs(q - p);
  const double bce = -(q * std::log(pc) + (1.0 - q) * std::log(1.0 - pc));
  const double dbce = -q / pc + (1.0 - q) / (1.0 - pc);
  const double sign = p > q ? 1.0 : (p < q ? -1.0 : 0.0);
  const double dmod = gap > 0.0 ? beta * std::pow(gap, beta - 1.0) * sign : 0.0;
  return dmod * bce + std::pow(gap, beta) * dbce;
}

double dfl(std::span<const double> probs, double y) {
  check_dfl(probs, y);
  const size_t i = static_cast<size_t>(std::floor(y));
  const double w_left = static_cast<double>(i) + 1.0 - y;
  double loss = -w_left * std::log(std::max(probs[i], kLogClamp));
  if (i + 1 < probs.size()) {
    loss -= (y - static_cast<double>(i)) * std::log(std::max(probs[i + 1], kLogClamp));
  }
  return loss;
}

std::vector<double> dfl_grad(std::span<const double> probs, double y) {
  check_dfl(probs, y);
  std::vector<double> g(probs.size(), 0.0);
  const size_t i = static_cast<size_t>(std::floor(y));
  g[i] = -(static_cast<double>(i) + 1.0 - y) / std::max(probs[i], kLogClamp);
  if (i + 1 < probs.size()) {
    g[i + 1] = -(y - static_cast<double>(i)) / std::max(probs[i + 1], kLogClamp);
  }
  return g;
}

double giou(const Box& pred, const Box& gt) {
  validate_box(pred, "pred");
  validate_box(gt, "gt");
  const double inter = intersection_area(pred, gt);
  const double uni = pred.area() + gt.area() - inter;
  const double h = hull(pred, gt).area();
  if (h <= 0.0) return 0.0;
  const double iou_v = uni > 0.0 ? inter / uni : 0.0;
  return iou_v - (h - uni) / h;
}

double giou_loss(const Box& pred, const Box& gt) { return 1.0 - giou(pred, gt); }

std::array<double, 4> giou_loss_grad(const Box& p, const Box& g) {
  validate_box(p, "pred");
  validate_box(g, "gt");
  const double iw = std::min(p.x2, g.x2) - std::max(p.x1, g.x1);
  const double ih = std::min(p.y2, g.y2) - std::max(p.y1, g.y1);
  const bool overlap = iw > 0.0 && ih > 0.0;
  const double inter = overlap ? iw * ih : 0.0;
  const double uni = p.area() + g.area() - inter;
  const Box hb = hull(p, g);
  const double hw = hb.width(), hh = hb.height(), h = hw * hh;
  if (h <= 0.0 || uni <= 0.0) return {0.0, 0.0, 0.0, 0.0};

  // Partials with respect to (x1, y1, x2, y2) of the prediction.
  const double pw = p.width(), ph = p.height();
  const std::array<double, 4> d_area = {-ph, -pw, ph, pw};
  std::array<double, 4> d_inter = {0.0, 0.0, 0.0, 0.0};
  if (overlap) {
    d_inter[0] = p.x1 > g.x1 ? -ih : 0.0;
    d_inter[1] = p.y1 > g.y1 ? -iw : 0.0;
    d_inter[2] = p.x2 < g.x2 ? ih : 0.0;
    d_inter[3] = p.y2 < g.y2 ? iw : 0.0;
  }
  const std::array<double, 4> d_hull = {
      p.x1 <= g.x1 ? -hh : 0.0, p.y1 <= g.y1 ? -hw : 0.0,
      p.x2 >= g.x2 ? hh : 0.0, p.y2 >= g.y2 ? hw : 0.0};

  // giou = inter / uni - 1 + uni / hull.
  std::array<double, 4> out{};
  for (size_t k = 0; k < 4; ++k) {
    const double d_uni = d_area[k] - d_inter[k];
    const double d_iou = (d_inter[k] * uni - inter * d_uni) / (uni * uni);
    const double d_ratio = (d_uni * h - uni * d_hull[k]) / (h * h);
    out[k] = -(d_iou + d_ratio);
  }
  return out;
}

void LossWeights::validate() const {
  if (qfl < 0.0 || dfl < 0.0 || giou < 0.0) {
    throw InputError("loss weights must be non-negative");
  }
  if (qfl == 0.0 && dfl == 0.0 && giou == 0.0) {
    throw InputError("at least one loss weight must be positive");
  }
}

double total_loss(const LossComponents& c, const LossWeights& w) {
  w.validate();
  if (c.qfl < 0.0 || c.dfl < 0.0 || c.giou < 0.0) {
    throw InputError("loss components must be non-negative");
  }
  return w.qfl * c.qfl + w.dfl * c.dfl + w.giou * c.giou;
}

LossBreakdown compose_loss(const LossComponents& c, const LossWeights& w,
                           double distill, double distill_weight) {
  if (distill < 0.0) throw InputError("distillation loss must be non-negative");
  if (distill_weight < 0.0) throw InputError("distillation weight must be non-negative");
  LossBreakdown b;
  b.qfl = c.qfl;
  b.dfl = c.dfl;
  b.giou = c.giou;
  b.distill = distill;
  b.distill_weight = distill_weight;
  b.total = total_loss(c, w) + distill * distill_weight;
  return b;
}

}  // namespace detkit
