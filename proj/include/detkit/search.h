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

#ifndef DETKIT_SEARCH_H_
#define DETKIT_SEARCH_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "detkit/cost_model.h"
#include "detkit/genome.h"
#include "detkit/lowering.h"
#include "detkit/mutate.h"
#include "detkit/proxy.h"

namespace detkit {

struct SearchConfig {
  int population = 8;
  int generations = 10;
  int mutations_per_child = 1;
  // May be +infinity for an unconstrained run.
  double latency_budget_ms = 1.0;
  uint64_t seed = 0;
  DeviceProfile device_profile = DeviceProfile::t4_like();
  int tournament_size = 2;
  // Worker threads for candidate evaluation; 0 picks hardware concurrency.
  // DETKIT_THREADS caps it further.
  int threads = 0;
  MutationSpace mutation;
  ProxyOptions proxy;
  CostOptions cost;
  LoweringOptions lowering;

  void validate() const;
};

nlohmann::json search_config_to_json(const SearchConfig& config);
SearchConfig search_config_from_json(const nlohmann::json& doc);
SearchConfig load_search_config(const std::string& path);

struct Candidate {
  DetectorGenome genome;
  ProxyScore score;
  CostReport cost;
  int generation = 0;
  // Position within its generation.
  int index = 0;
  bool feasible = false;
};

struct ArchiveEntry {
  DetectorGenome genome;
  ProxyScore score;
  CostReport cost;
};

// True when `a` is no worse than `b` in both score (higher) and latency
// (lower) and strictly better in one.
bool dominates(const ArchiveEntry& a, const ArchiveEntry& b);

// Mutually non-dominated set in (score up, latency down). Entries are kept
// sorted by latency ascending; an exact tie with an existing entry is
// dropped, so insertion order decides between equal points.
class ParetoArchive {
 public:
  // Returns true when the entry was kept.
  bool insert(const ArchiveEntry& entry);
  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  // Highest score, ties to lower latency. Throws InvariantError when empty.
  const ArchiveEntry& best() const;
  size_t best_index() const;

 private:
  std::vector<ArchiveEntry> entries_;
};

struct GenerationLog {
  int generation = 0;
  int evaluated = 0;
  int feasible = 0;
  double best_score = 0.0;
  double best_latency_ms = 0.0;
};

struct SearchResult {
  ParetoArchive archive;
  ArchiveEntry best;
  std::vector<GenerationLog> log;
  // Every evaluated candidate, per generation, including infeasible ones.
  std::vector<std::vector<Candidate>> history;
};

// Lowers, scores and costs one genome. Pure; safe to call concurrently.
Candidate evaluate_candidate(const DetectorGenome& genome,
                             const SearchConfig& config);

using ProgressFn = std::function<void(const GenerationLog&)>;

// Seeded (mu+lambda) evolution. Generation 0 is the seed plus population-1
// mutants of it; each later generation breeds `population` children from
// tournament-selected parents, drops over-budget ones, and keeps the
// `population` highest-scoring genomes of parents and children. Every
// feasible candidate is offered to the Pareto archive.
//
// Throws InfeasibleError when the seed exceeds the budget.
SearchResult search(const DetectorGenome& seed, const SearchConfig& config,
                    const ProgressFn& progress = nullptr);

// Archive serialization: a header line, one line per entry in archive
// order, then a line naming the best entry. `header_extra` fields are
// merged into the header.
std::string archive_to_ndjson(const SearchResult& result,
                              const SearchConfig& config,
                              const nlohmann::json& header_extra = nullptr);

struct ArchiveRecord {
  DetectorGenome genome;
  double score = 0.0;
  std::vector<double> per_scale;
  double latency_ms = 0.0;
  uint64_t flops = 0;
  uint64_t params = 0;
};

struct ArchiveFile {
  nlohmann::json header;
  std::vector<ArchiveRecord> entries;
  size_t best = 0;
};

ArchiveFile parse_archive_ndjson(const std::string& text);

}  // namespace detkit

#endif  // DETKIT_SEARCH_H_
