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

#include "detkit/align_ota.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "detkit/errors.h"

namespace detkit {
namespace {

constexpr double kLogClamp = 1e-12;

double clamped_log(double x) { return std::log(std::max(x, kLogClamp)); }

int dynamic_k(const CostMatrix& m, size_t g, const std::vector<size_t>& cands,
              int max_candidates) {
  const size_t q = std::min(cands.size(), static_cast<size_t>(max_candidates));
  if (q == 0) return 0;
  std::vector<double> ious;
  for (size_t p : cands) ious.push_back(m.alpha[m.at(g, p)]);
  std::partial_sort(ious.begin(), ious.begin() + static_cast<long>(q), ious.end(),
                    std::greater<>());
  const double sum = std::accumulate(ious.begin(), ious.begin() + static_cast<long>(q), 0.0);
  return static_cast<int>(std::clamp<long>(std::lround(sum), 1, static_cast<long>(q)));
}

std::vector<size_t> candidates_of(const CostMatrix& m, size_t g) {
  std::vector<size_t> out;
  for (size_t p = 0; p < m.num_pred; ++p) {
    if (m.candidate[m.at(g, p)]) out.push_back(p);
  }
  return out;
}

AssignmentResult empty_result(const CostMatrix& m) {
  AssignmentResult r;
  r.assigned_gt.assign(m.num_pred, -1);
  r.soft_labels.assign(m.num_pred, 0.0);
  r.per_gt_k.assign(m.num_gt, 0);
  return r;
}

}  // namespace

int AssignmentResult::num_assigned() const {
  return static_cast<int>(
      std::count_if(assigned_gt.begin(), assigned_gt.end(), [](int g) { return g >= 0; }));
}

std::vector<std::vector<double>> pairwise_iou(const std::vector<GroundTruth>& gts,
                                              const std::vector<Prediction>& preds) {
  std::vector<std::vector<double>> out(gts.size(), std::vector<double>(preds.size()));
  for (size_t g = 0; g < gts.size(); ++g) {
    for (size_t p = 0; p < preds.size(); ++p) out[g][p] = iou(gts[g].box, preds[p].box);
  }
  return out;
}

double align_reg_cost(double alpha, double eps) {
  return -std::log(std::max(alpha, eps));
}

double align_cls_cost(double alpha, double p) {
  const double bce = -(alpha * clamped_log(p) + (1.0 - alpha) * clamped_log(1.0 - p));
  return (alpha - p) * (alpha - p) * bce;
}

CostMatrix align_cost(const std::vector<GroundTruth>& gts,
                      const std::vector<Prediction>& preds,
                      const AlignCostOptions& options) {
  CostMatrix m;
  m.num_gt = gts.size();
  m.num_pred = preds.size();
  const size_t n = m.num_gt * m.num_pred;
  m.alpha.resize(n);
  m.reg_cost.resize(n);
  m.cls_cost.resize(n);
  m.cost.resize(n);
  m.candidate.resize(n);
  for (size_t p = 0; p < preds.size(); ++p) {
    for (double s : preds[p].cls_scores) {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw InputError("prediction " + std::to_string(p) + ": score outside [0, 1]");
      }
    }
  }
  for (size_t g = 0; g < gts.size(); ++g) {
    const GroundTruth& gt = gts[g];
    for (size_t p = 0; p < preds.size(); ++p) {
      const Prediction& pr = preds[p];
      if (gt.class_id < 0 ||
          static_cast<size_t>(gt.class_id) >= pr.cls_scores.size()) {
        throw InputError("ground truth " + std::to_string(g) + ": class_id " +
                         std::to_string(gt.class_id) + " outside prediction " +
                         std::to_string(p) + "'s score vector");
      }
      const size_t i = m.at(g, p);
      const double a = iou(gt.box, pr.box);
      const double score = pr.cls_scores[static_cast<size_t>(gt.class_id)];
      m.alpha[i] = a;
      m.reg_cost[i] = align_reg_cost(a, options.eps);
      m.cls_cost[i] = align_cls_cost(a, score);
      m.cost[i] = m.reg_cost[i] + m.cls_cost[i];
      bool ok = a > options.eps;
      if (options.center_prior) ok = ok && gt.box.contains(pr.anchor_x, pr.anchor_y);
      m.candidate[i] = ok ? 1 : 0;
    }
  }
  return m;
}

AssignmentResult DynamicKAssigner::assign(const CostMatrix& m) const {
  AssignmentResult r = empty_result(m);
  std::vector<double> best_cost(m.num_pred, std::numeric_limits<double>::infinity());
  for (size_t g = 0; g < m.num_gt; ++g) {
    std::vector<size_t> cands = candidates_of(m, g);
    const int k = dynamic_k(m, g, cands, options_.max_candidates);
    r.per_gt_k[g] = k;
    if (k == 0) {
      r.empty_gts.push_back(static_cast<int>(g));
      continue;
    }
    std::stable_sort(cands.begin(), cands.end(), [&](size_t a, size_t b) {
      return m.cost[m.at(g, a)] < m.cost[m.at(g, b)];
    });
    for (size_t j = 0; j < static_cast<size_t>(k); ++j) {
      const size_t p = cands[j];
      const double c = m.cost[m.at(g, p)];
      // GTs are visited in index order, so a strict comparison keeps the
      // lower GT index on equal cost.
      if (c < best_cost[p]) {
        best_cost[p] = c;
        r.assigned_gt[p] = static_cast<int>(g);
      }
    }
  }
  for (size_t p = 0; p < m.num_pred; ++p) {
    if (r.assigned_gt[p] >= 0) {
      r.soft_labels[p] = m.alpha[m.at(static_cast<size_t>(r.assigned_gt[p]), p)];
    }
  }
  return r;
}

AssignmentResult dynamic_k_assign(const CostMatrix& costs,
                                  const DynamicKOptions& options) {
  return DynamicKAssigner(options).assign(costs);
}

AssignmentResult SinkhornAssigner::assign(const CostMatrix& m) const {
  AssignmentResult r = empty_result(m);
  if (m.num_pred == 0) {
    for (size_t g = 0; g < m.num_gt; ++g) r.empty_gts.push_back(static_cast<int>(g));
    return r;
  }
  // Rows 0..G-1 are GTs, row G is background.
  const size_t rows = m.num_gt + 1;
  std::vector<double> supply(rows, 0.0);
  double total_k = 0.0;
  for (size_t g = 0; g < m.num_gt; ++g) {
    const int k = dynamic_k(m, g, candidates_of(m, g), options_.max_candidates);
    r.per_gt_k[g] = k;
    if (k == 0) r.empty_gts.push_back(static_cast<int>(g));
    supply[g] = k;
    total_k += k;
  }
  const double n = static_cast<double>(m.num_pred);
  if (total_k > n) {
    for (size_t g = 0; g < m.num_gt; ++g) supply[g] *= n / total_k;
    total_k = n;
  }
  supply[m.num_gt] = n - total_k;

  // Log-domain Sinkhorn on the kernel exp(-C / epsilon).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> log_kernel(rows * m.num_pred, -inf);
  for (size_t g = 0; g < m.num_gt; ++g) {
    for (size_t p = 0; p < m.num_pred; ++p) {
      if (m.candidate[m.at(g, p)]) {
        log_kernel[g * m.num_pred + p] = -m.cost[m.at(g, p)] / options_.epsilon;
      }
    }
  }
  for (size_t p = 0; p < m.num_pred; ++p) {
    log_kernel[m.num_gt * m.num_pred + p] = -options_.background_cost / options_.epsilon;
  }
  auto log_sum_exp = [](const std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    if (mx == -std::numeric_limits<double>::infinity()) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
  };
  std::vector<double> f(rows, 0.0), h(m.num_pred, 0.0), buf;
  for (int it = 0; it < options_.iterations; ++it) {
    for (size_t i = 0; i < rows; ++i) {
      if (supply[i] <= 0.0) {
        f[i] = -inf;
        continue;
      }
      buf.assign(m.num_pred, 0.0);
      for (size_t p = 0; p < m.num_pred; ++p) buf[p] = log_kernel[i * m.num_pred + p] + h[p];
      f[i] = std::log(supply[i]) - log_sum_exp(buf);
    }
    for (size_t p = 0; p < m.num_pred; ++p) {
      buf.assign(rows, 0.0);
      for (size_t i = 0; i < rows; ++i) buf[i] = log_kernel[i * m.num_pred + p] + f[i];
      h[p] = -log_sum_exp(buf);
    }
  }
  for (size_t p = 0; p < m.num_pred; ++p) {
    size_t best = m.num_gt;
    double best_plan = -inf;
    for (size_t i = 0; i < rows; ++i) {
      const double plan = log_kernel[i * m.num_pred + p] + f[i] + h[p];
      if (plan > best_plan) {
        best_plan = plan;
        best = i;
      }
    }
    if (best < m.num_gt) {
      r.assigned_gt[p] = static_cast<int>(best);
      r.soft_labels[p] = m.alpha[m.at(best, p)];
    }
  }
  return r;
}

std::vector<AssignImage> images_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array()) {
    throw SchemaError("images", "expected an array of images");
  }
  std::vector<AssignImage> images;
  for (size_t i = 0; i < doc["images"].size(); ++i) {
    const nlohmann::json& img = doc["images"][i];
    const std::string base = "images[" + std::to_string(i) + "]";
    if (!img.is_object()) throw SchemaError(base, "expected an object");
    AssignImage out;
    const nlohmann::json preds = img.value("predictions", nlohmann::json::array());
    const nlohmann::json gts = img.value("ground_truths", nlohmann::json::array());
    if (!preds.is_array()) throw SchemaError(base + ".predictions", "expected an array");
    if (!gts.is_array()) throw SchemaError(base + ".ground_truths", "expected an array");
    for (size_t p = 0; p < preds.size(); ++p) {
      const std::string path = base + ".predictions[" + std::to_string(p) + "]";
      const nlohmann::json& pj = preds[p];
      if (!pj.is_object() || !pj.contains("box") || !pj.contains("cls_scores")) {
        throw SchemaError(path, "needs box and cls_scores");
      }
      Prediction pr;
      pr.box = box_from_json(pj["box"], path + ".box");
      if (!pj["cls_scores"].is_array()) {
        throw SchemaError(path + ".cls_scores", "expected an array");
      }
      for (const nlohmann::json& s : pj["cls_scores"]) {
        if (!s.is_number() || s.get<double>() < 0.0 || s.get<double>() > 1.0) {
          throw SchemaError(path + ".cls_scores", "scores must be numbers in [0, 1]");
        }
        pr.cls_scores.push_back(s.get<double>());
      }
      if (pj.contains("anchor_point")) {
        const nlohmann::json& a = pj["anchor_point"];
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
          throw SchemaError(path + ".anchor_point", "expected [x, y]");
        }
        pr.anchor_x = a[0].get<double>();
        pr.anchor_y = a[1].get<double>();
      } else {
        pr.anchor_x = 0.5 * (pr.box.x1 + pr.box.x2);
        pr.anchor_y = 0.5 * (pr.box.y1 + pr.box.y2);
      }
      out.predictions.push_back(std::move(pr));
    }
    for (size_t g = 0; g < gts.size(); ++g) {
      const std::string path = base + ".ground_truths[" + std::to_string(g) + "]";
      const nlohmann::json& gj = gts[g];
      if (!gj.is_object() || !gj.contains("box") || !gj.contains("class_id")) {
        throw SchemaError(path, "needs box and class_id");
      }
      GroundTruth gt;
      gt.box = box_from_json(gj["box"], path + ".box");
      if (!gj["class_id"].is_number_integer()) {
        throw SchemaError(path + ".class_id", "expected an integer");
      }
      gt.class_id = gj["class_id"].get<int>();
      if (gt.box.area() <= 0.0) throw SchemaError(path + ".box", "zero area");
      for (const Prediction& pr : out.predictions) {
        if (gt.class_id < 0 || static_cast<size_t>(gt.class_id) >= pr.cls_scores.size()) {
          throw SchemaError(path + ".class_id", "outside the prediction score range");
        }
      }
      out.ground_truths.push_back(gt);
    }
    images.push_back(std::move(out));
  }
  return images;
}

nlohmann::json assignment_to_json(const AssignmentResult& r, size_t image) {
  nlohmann::json warnings = nlohmann::json::array();
  for (int g : r.empty_gts) {
    warnings.push_back("ground truth " + std::to_string(g) + " has no candidate");
  }
  return nlohmann::json{{"image", image},
                        {"assigned_gt", r.assigned_gt},
                        {"soft_labels", r.soft_labels},
                        {"per_gt_k", r.per_gt_k},
                        {"warnings", warnings}};
}

}  // namespace detkit
