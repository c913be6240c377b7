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

#ifndef DETKIT_TESTS_ASSIGN_ORACLE_H_
#define DETKIT_TESTS_ASSIGN_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <vector>

#include "detkit/align_ota.h"

namespace detkit::testing {

// Written from the rule text alone, with linear scans instead of sorts.
inline AssignmentResult naive_assign(const CostMatrix& m) {
  AssignmentResult r;
  r.assigned_gt.assign(m.num_pred, -1);
  r.soft_labels.assign(m.num_pred, 0.0);
  r.per_gt_k.assign(m.num_gt, 0);
  std::vector<std::vector<int>> picked(m.num_gt);
  for (size_t g = 0; g < m.num_gt; ++g) {
    std::vector<bool> taken(m.num_pred, false);
    int count = 0;
    for (size_t p = 0; p < m.num_pred; ++p) count += m.candidate[g * m.num_pred + p] ? 1 : 0;
    if (count == 0) {
      r.empty_gts.push_back(static_cast<int>(g));
      continue;
    }
    const int q = std::min(count, 10);
    double sum = 0.0;
    for (int j = 0; j < q; ++j) {
      int arg = -1;
      for (size_t p = 0; p < m.num_pred; ++p) {
        if (!m.candidate[g * m.num_pred + p] || taken[p]) continue;
        if (arg < 0 || m.alpha[g * m.num_pred + p] > m.alpha[g * m.num_pred + arg]) {
          arg = static_cast<int>(p);
        }
      }
      taken[static_cast<size_t>(arg)] = true;
      sum += m.alpha[g * m.num_pred + static_cast<size_t>(arg)];
    }
    int k = static_cast<int>(std::lround(sum));
    k = std::max(1, std::min(k, q));
    r.per_gt_k[g] = k;
    std::fill(taken.begin(), taken.end(), false);
    for (int j = 0; j < k; ++j) {
      int arg = -1;
      for (size_t p = 0; p < m.num_pred; ++p) {
        if (!m.candidate[g * m.num_pred + p] || taken[p]) continue;
        if (arg < 0 || m.cost[g * m.num_pred + p] < m.cost[g * m.num_pred + arg]) {
          arg = static_cast<int>(p);
        }
      }
      taken[static_cast<size_t>(arg)] = true;
      picked[g].push_back(arg);
    }
  }
  for (size_t p = 0; p < m.num_pred; ++p) {
    int owner = -1;
    for (size_t g = 0; g < m.num_gt; ++g) {
      if (std::find(picked[g].begin(), picked[g].end(), static_cast<int>(p)) ==
          picked[g].end()) {
        continue;
      }
      if (owner < 0 || m.cost[g * m.num_pred + p] <
                           m.cost[static_cast<size_t>(owner) * m.num_pred + p]) {
        owner = static_cast<int>(g);
      }
    }
    r.assigned_gt[p] = owner;
    if (owner >= 0) r.soft_labels[p] = m.alpha[static_cast<size_t>(owner) * m.num_pred + p];
  }
  return r;
}

}  // namespace detkit::testing

#endif  // DETKIT_TESTS_ASSIGN_ORACLE_H_
