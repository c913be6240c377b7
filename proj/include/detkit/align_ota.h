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

#ifndef DETKIT_ALIGN_OTA_H_
#define DETKIT_ALIGN_OTA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "detkit/box.h"

namespace detkit {

struct Prediction {
  Box box;
  // Per-class probabilities in [0, 1].
  std::vector<double> cls_scores;
  double anchor_x = 0.0;
  double anchor_y = 0.0;
};

struct GroundTruth {
  Box box;
  int class_id = 0;
};

// Dense |GT| x |pred| matrices, row-major by GT.
struct CostMatrix {
  size_t num_gt = 0;
  size_t num_pred = 0;
  std::vector<double> alpha;     // IoU
  std::vector<double> reg_cost;  // -ln(max(alpha, eps))
  std::vector<double> cls_cost;  // (alpha - p)^2 * BCE(p, alpha)
  std::vector<double> cost;      // reg_cost + cls_cost
  std::vector<uint8_t> candidate;

  size_t at(size_t gt, size_t pred) const { return gt * num_pred + pred; }
};

struct AlignCostOptions {
  double eps = 1e-8;
  // Also require the prediction's anchor point to lie inside the GT box.
  bool center_prior = false;
};

// IoU matrix indexed [gt][pred].
std::vector<std::vector<double>> pairwise_iou(const std::vector<GroundTruth>& gts,
                                              const std::vector<Prediction>& preds);

double align_reg_cost(double alpha, double eps = 1e-8);
// Squared-gap-modulated binary cross-entropy of score `p` against soft
// target `alpha`. Logs are clamped at 1e-12.
double align_cls_cost(double alpha, double p);

// Pairs with alpha <= eps are never candidates. Throws InputError on a
// class id outside a prediction's score vector or a score outside [0, 1].
CostMatrix align_cost(const std::vector<GroundTruth>& gts,
                      const std::vector<Prediction>& preds,
                      const AlignCostOptions& options = {});

struct AssignmentResult {
  // Per prediction: GT index or -1.
  std::vector<int> assigned_gt;
  // Per prediction: the IoU used as classification target, 0 if unassigned.
  std::vector<double> soft_labels;
  // Per GT: the dynamic k it asked for.
  std::vector<int> per_gt_k;
  // GTs that had no candidate at all.
  std::vector<int> empty_gts;

  bool has_warning() const { return !empty_gts.empty(); }
  int num_assigned() const;
};

class Assigner {
 public:
  virtual ~Assigner() = default;
  virtual AssignmentResult assign(const CostMatrix& costs) const = 0;
};

struct DynamicKOptions {
  int max_candidates = 10;
};

// simOTA-style dynamic-k. For each GT, q = min(max_candidates, #candidates)
// and k = clamp(round(sum of its top-q IoUs), 1, q); it claims its k
// lowest-cost candidates (ties by prediction index). A prediction claimed
// by several GTs goes to the cheapest one (ties by GT index); the losing
// GT is not refilled.
class DynamicKAssigner : public Assigner {
 public:
  explicit DynamicKAssigner(DynamicKOptions options = {}) : options_(options) {}
  AssignmentResult assign(const CostMatrix& costs) const override;

 private:
  DynamicKOptions options_;
};

AssignmentResult dynamic_k_assign(const CostMatrix& costs,
                                  const DynamicKOptions& options = {});

struct SinkhornOptions {
  double epsilon = 0.1;
  int iterations = 100;
  // Transport cost of leaving a prediction to background.
  double background_cost = 3.0;
  int max_candidates = 10;
};

// Entropic optimal transport: each GT supplies its dynamic k, background
// supplies the rest, every prediction demands one unit. Predictions go to
// their largest plan entry.
class SinkhornAssigner : public Assigner {
 public:
  explicit SinkhornAssigner(SinkhornOptions options = {}) : options_(options) {}
  AssignmentResult assign(const CostMatrix& costs) const override;

 private:
  SinkhornOptions options_;
};

struct AssignImage {
  std::vector<Prediction> predictions;
  std::vector<GroundTruth> ground_truths;
};

// Reads {"images": [{"predictions": [...], "ground_truths": [...]}]}.
std::vector<AssignImage> images_from_json(const nlohmann::json& doc);
nlohmann::json assignment_to_json(const AssignmentResult& result, size_t image);

}  // namespace detkit

#endif  // DETKIT_ALIGN_OTA_H_
