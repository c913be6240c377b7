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

#include "detkit/search.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "detkit/errors.h"
#include "detkit/genome_json.h"

namespace detkit {
namespace {

constexpr int kArchiveSchemaVersion = 1;

// Survivor order: score desc, latency asc, then birth order.
bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.score.value != b.score.value) return a.score.value > b.score.value;
  if (a.cost.latency_ms != b.cost.latency_ms) {
    return a.cost.latency_ms < b.cost.latency_ms;
  }
  if (a.generation != b.generation) return a.generation < b.generation;
  return a.index < b.index;
}

int worker_count(int requested, size_t jobs) {
  int n = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DETKIT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  n = std::max(n, 1);
  return static_cast<int>(std::min<size_t>(static_cast<size_t>(n), jobs));
}

// Evaluates every genome; results are stored by index so the merge order
// never depends on scheduling.
std::vector<Candidate> evaluate_all(const std::vector<DetectorGenome>& genomes,
                                    const SearchConfig& config, int generation) {
  std::vector<Candidate> out(genomes.size());
  std::vector<std::exception_ptr> errors(genomes.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < genomes.size(); i = next++) {
      try {
        out[i] = evaluate_candidate(genomes[i], config);
        out[i].cost.per_node.clear();
        out[i].generation = generation;
        out[i].index = static_cast<int>(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = worker_count(config.threads, genomes.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

DetectorGenome breed(const DetectorGenome& parent, const SearchConfig& config,
                     std::mt19937_64& rng) {
  DetectorGenome child = parent;
  for (int m = 0; m < config.mutations_per_child; ++m) {
    child = mutate(child, config.mutation, rng).genome;
  }
  return child;
}

const Candidate& tournament(const std::vector<Candidate>& pool, int size,
                            std::mt19937_64& rng) {
  std::uniform_int_distribution<size_t> dist(0, pool.size() - 1);
  const Candidate* best = &pool[dist(rng)];
  for (int i = 1; i < size; ++i) {
    const Candidate& c = pool[dist(rng)];
    if (ranks_before(c, *best)) best = &c;
  }
  return *best;
}

ArchiveEntry to_entry(const Candidate& c) {
  return ArchiveEntry{c.genome, c.score, c.cost};
}

GenerationLog summarize(int generation, const std::vector<Candidate>& evaluated,
                        const std::vector<Candidate>& population) {
  GenerationLog log;
  log.generation = generation;
  log.evaluated = static_cast<int>(evaluated.size());
  for (const Candidate& c : evaluated) log.feasible += c.feasible ? 1 : 0;
  log.best_score = population.front().score.value;
  log.best_latency_ms = population.front().cost.latency_ms;
  return log;
}

double number_or_inf(const nlohmann::json& v, const std::string& path) {
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (!v.is_number()) throw SchemaError(path, "expected a number or null");
  return v.get<double>();
}

}  // namespace

void SearchConfig::validate() const {
  if (population < 2) throw SchemaError("population", "must be >= 2");
  if (generations < 0) throw SchemaError("generations", "must be >= 0");
  if (mutations_per_child < 1) {
    throw SchemaError("mutations_per_child", "must be >= 1");
  }
  if (!(latency_budget_ms > 0.0)) {
    throw SchemaError("latency_budget_ms", "must be positive");
  }
  if (tournament_size < 1) throw SchemaError("tournament_size", "must be >= 1");
  if (threads < 0) throw SchemaError("threads", "must be >= 0");
  device_profile.validate();
  mutation.validate();
}

nlohmann::json search_config_to_json(const SearchConfig& c) {
  nlohmann::json budget = nullptr;
  if (std::isfinite(c.latency_budget_ms)) budget = c.latency_budget_ms;
  return nlohmann::json{
      {"population", c.population},
      {"generations", c.generations},
      {"mutations_per_child", c.mutations_per_child},
      {"latency_budget_ms", budget},
      {"seed", c.seed},
      {"device_profile", profile_to_json(c.device_profile)},
      {"tournament_size", c.tournament_size},
      {"mutation", mutation_space_to_json(c.mutation)},
      {"proxy",
       {{"input_variance", c.proxy.input_variance},
        {"scale_weights", c.proxy.scale_weights}}},
      {"strict_cost", c.cost.strict},
  };
}

SearchConfig search_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("$", "expected an object");
  SearchConfig c;
  auto get_int = [&](const char* key, int& out) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number_integer()) {
      throw SchemaError(key, "expected an integer");
    }
    out = doc[key].get<int>();
  };
  get_int("population", c.population);
  get_int("generations", c.generations);
  get_int("mutations_per_child", c.mutations_per_child);
  get_int("tournament_size", c.tournament_size);
  get_int("threads", c.threads);
  if (!doc.contains("latency_budget_ms")) {
    throw SchemaError("latency_budget_ms", "missing required field");
  }
  c.latency_budget_ms = number_or_inf(doc["latency_budget_ms"], "latency_budget_ms");
  if (doc.contains("seed")) {
    const nlohmann::json& s = doc["seed"];
    if (!s.is_number_integer()) throw SchemaError("seed", "expected an integer");
    c.seed = s.is_number_unsigned() ? s.get<uint64_t>()
                                    : static_cast<uint64_t>(s.get<int64_t>());
  }
  if (doc.contains("device_profile")) {
    const nlohmann::json& p = doc["device_profile"];
    if (p.is_string()) {
      c.device_profile = load_profile(p.get<std::string>());
    } else {
      try {
        c.device_profile = profile_from_json(p);
      } catch (const SchemaError& e) {
        throw SchemaError("device_profile." + e.path(), e.what());
      }
    }
  }
  if (doc.contains("mutation")) {
    c.mutation = mutation_space_from_json(doc["mutation"], "mutation");
  }
  if (doc.contains("proxy")) {
    const nlohmann::json& p = doc["proxy"];
    if (!p.is_object()) throw SchemaError("proxy", "expected an object");
    if (p.contains("input_variance")) {
      if (!p["input_variance"].is_number()) {
        throw SchemaError("proxy.input_variance", "expected a number");
      }
      c.proxy.input_variance = p["input_variance"].get<double>();
    }
    if (p.contains("scale_weights")) {
      if (!p["scale_weights"].is_array()) {
        throw SchemaError("proxy.scale_weights", "expected an array");
      }
      for (const nlohmann::json& w : p["scale_weights"]) {
        if (!w.is_number()) {
          throw SchemaError("proxy.scale_weights", "expected numbers");
        }
        c.proxy.scale_weights.push_back(w.get<double>());
      }
    }
  }
  if (doc.contains("strict_cost")) {
    if (!doc["strict_cost"].is_boolean()) {
      throw SchemaError("strict_cost", "expected a boolean");
    }
    c.cost.strict = doc["strict_cost"].get<bool>();
  }
  c.validate();
  return c;
}

SearchConfig load_search_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open search config '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  return search_config_from_json(doc);
}

bool dominates(const ArchiveEntry& a, const ArchiveEntry& b) {
  const double sa = a.score.value, sb = b.score.value;
  const double la = a.cost.latency_ms, lb = b.cost.latency_ms;
  return sa >= sb && la <= lb && (sa > sb || la < lb);
}

bool ParetoArchive::insert(const ArchiveEntry& entry) {
  for (const ArchiveEntry& e : entries_) {
    if (dominates(e, entry)) return false;
    if (e.score.value == entry.score.value &&
        e.cost.latency_ms == entry.cost.latency_ms) {
      return false;
    }
  }
  std::erase_if(entries_,
                [&](const ArchiveEntry& e) { return dominates(entry, e); });
  auto pos = std::upper_bound(
      entries_.begin(), entries_.end(), entry,
      [](const ArchiveEntry& a, const ArchiveEntry& b) {
        return a.cost.latency_ms < b.cost.latency_ms;
      });
  entries_.insert(pos, entry);
  return true;
}

size_t ParetoArchive::best_index() const {
  if (entries_.empty()) throw InvariantError("Pareto archive is empty");
  size_t best = 0;
  for (size_t i = 1; i < entries_.size(); ++i) {
    const ArchiveEntry& a = entries_[i];
    const ArchiveEntry& b = entries_[best];
    if (a.score.value > b.score.value ||
        (a.score.value == b.score.value &&
         a.cost.latency_ms < b.cost.latency_ms)) {
      best = i;
    }
  }
  return best;
}

const ArchiveEntry& ParetoArchive::best() const { return entries_[best_index()]; }

Candidate evaluate_candidate(const DetectorGenome& genome,
                             const SearchConfig& config) {
  const OpGraph graph = build_graph(genome, config.lowering);
  Candidate c;
  c.genome = genome;
  c.score = entropy_score(graph, config.proxy);
  c.cost = evaluate_cost(graph, config.device_profile, config.cost);
  c.feasible = c.cost.latency_ms <= config.latency_budget_ms;
  return c;
}

SearchResult search(const DetectorGenome& seed, const SearchConfig& config,
                    const ProgressFn& progress) {
  config.validate();
  validate(seed);
  std::mt19937_64 rng(config.seed);
  SearchResult result;

  std::vector<DetectorGenome> genomes = {seed};
  for (int i = 1; i < config.population; ++i) {
    genomes.push_back(breed(seed, config, rng));
  }
  std::vector<Candidate> evaluated = evaluate_all(genomes, config, 0);
  if (!evaluated.front().feasible) {
    std::ostringstream msg;
    msg << "seed genome latency " << evaluated.front().cost.latency_ms
        << " ms exceeds budget " << config.latency_budget_ms << " ms";
    throw InfeasibleError(msg.str());
  }

  std::vector<Candidate> population;
  auto absorb = [&](const std::vector<Candidate>& batch) {
    for (const Candidate& c : batch) {
      if (!c.feasible) continue;
      population.push_back(c);
      result.archive.insert(to_entry(c));
    }
    std::stable_sort(population.begin(), population.end(), ranks_before);
    if (population.size() > static_cast<size_t>(config.population)) {
      population.resize(static_cast<size_t>(config.population));
    }
  };

  absorb(evaluated);
  if (population.empty()) {
    throw InfeasibleError("no feasible candidate after generation 0");
  }
  result.log.push_back(summarize(0, evaluated, population));
  result.history.push_back(std::move(evaluated));
  if (progress) progress(result.log.back());

  for (int gen = 1; gen <= config.generations; ++gen) {
    genomes.clear();
    for (int i = 0; i < config.population; ++i) {
      const Candidate& parent = tournament(population, config.tournament_size, rng);
      genomes.push_back(breed(parent.genome, config, rng));
    }
    evaluated = evaluate_all(genomes, config, gen);
    absorb(evaluated);
    result.log.push_back(summarize(gen, evaluated, population));
    result.history.push_back(std::move(evaluated));
    if (progress) progress(result.log.back());
  }

  result.best = result.archive.best();
  if (result.best.cost.latency_ms > config.latency_budget_ms) {
    throw InvariantError("best genome exceeds the latency budget");
  }
  return result;
}

std::string archive_to_ndjson(const SearchResult& result,
                              const SearchConfig& config,
                              const nlohmann::json& header_extra) {
  nlohmann::json header{{"type", "header"},
                        {"format", "detkit-archive"},
                        {"schema_version", kArchiveSchemaVersion},
                        {"entries", result.archive.size()},
                        {"config", search_config_to_json(config)}};
  if (header_extra.is_object()) {
    for (auto it = header_extra.begin(); it != header_extra.end(); ++it) {
      header[it.key()] = it.value();
    }
  }
  std::string out = header.dump() + "\n";
  const std::vector<ArchiveEntry>& entries = result.archive.entries();
  for (size_t i = 0; i < entries.size(); ++i) {
    const ArchiveEntry& e = entries[i];
    nlohmann::json line{{"type", "entry"},
                        {"rank", i},
                        {"score", e.score.value},
                        {"per_scale", e.score.per_scale},
                        {"latency_ms", e.cost.latency_ms},
                        {"flops", e.cost.flops},
                        {"params", e.cost.params},
                        {"genome", genome_to_json(e.genome)}};
    out += line.dump() + "\n";
  }
  const size_t best = result.archive.best_index();
  nlohmann::json tail{{"type", "best"},
                      {"rank", best},
                      {"score", entries[best].score.value},
                      {"latency_ms", entries[best].cost.latency_ms}};
  out += tail.dump() + "\n";
  return out;
}

ArchiveFile parse_archive_ndjson(const std::string& text) {
  ArchiveFile file;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_header = false, have_best = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(where, std::string("invalid JSON: ") + e.what());
    }
    const std::string type = doc.value("type", "");
    try {
      if (type == "header") {
        if (doc.value("format", "") != "detkit-archive") {
          throw SchemaError(where + ".format", "not a detkit archive");
        }
        file.header = doc;
        have_header = true;
      } else if (type == "entry") {
        ArchiveRecord r;
        r.genome = genome_from_json(doc.at("genome"));
        r.score = doc.at("score").get<double>();
        r.per_scale = doc.at("per_scale").get<std::vector<double>>();
        r.latency_ms = doc.at("latency_ms").get<double>();
        r.flops = doc.at("flops").get<uint64_t>();
        r.params = doc.at("params").get<uint64_t>();
        file.entries.push_back(std::move(r));
      } else if (type == "best") {
        file.best = doc.at("rank").get<size_t>();
        have_best = true;
      } else {
        throw SchemaError(where + ".type", "unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(where, e.what());
    }
  }
  if (!have_header) throw SchemaError("header", "missing header line");
  if (!have_best || file.best >= file.entries.size()) {
    throw SchemaError("best", "missing or out-of-range best line");
  }
  return file;
}

}  // namespace detkit
