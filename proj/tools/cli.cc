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

#include "cli.h"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "detkit/align_ota.h"
#include "detkit/cost_model.h"
#include "detkit/distill.h"
#include "detkit/errors.h"
#include "detkit/genome_json.h"
#include "detkit/losses.h"
#include "detkit/lowering.h"
#include "detkit/proxy.h"
#include "detkit/reparam.h"
#include "detkit/search.h"
#include "detkit/tensor_io.h"
#include "detkit/version.h"

namespace detkit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

RunManifest start_manifest(const std::string& command, const std::string& hashed,
                           uint64_t seed = 0) {
  RunManifest m;
  m.command = command;
  m.config_hash = fnv1a_hex(hashed);
  m.seed = seed;
  m.version = kVersion;
  m.started_at = utc_now();
  return m;
}

void write_manifest(RunManifest m, const std::string& output) {
  m.finished_at = utc_now();
  write_text_file(manifest_path(output), m.to_json().dump(2) + "\n");
}

// Resolves `path` relative to the directory of `anchor`.
std::string relative_to(const std::string& anchor, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(anchor).parent_path() / p).string();
}

double number_field(const json& doc, const char* key, const std::string& path) {
  if (!doc.contains(key) || !doc[key].is_number()) {
    throw SchemaError(path + "." + key, "expected a number");
  }
  return doc[key].get<double>();
}

DetectorGenome load_genome_with_res(const std::string& path, int res) {
  DetectorGenome g = load_genome_file(path);
  if (res > 0) {
    g.input_h = res;
    g.input_w = res;
    try {
      validate(g);
    } catch (const SchemaError& e) {
      throw SchemaError("input_res", e.what());
    }
  }
  return g;
}

// ---- search -------------------------------------------------------------

struct SearchArgs {
  std::string space, config, out, csv;
  std::optional<uint64_t> seed;
  std::optional<double> budget;
  int threads = -1;
};

int cmd_search(const SearchArgs& a, std::ostream& out, std::ostream& err) {
  const DetectorGenome seed_genome = load_genome_file(a.space);
  SearchConfig config = load_search_config(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.budget) config.latency_budget_ms = *a.budget;
  if (a.threads >= 0) config.threads = a.threads;
  config.validate();

  const std::string hashed = search_config_to_json(config).dump() +
                             genome_to_json(seed_genome).dump();
  RunManifest manifest = start_manifest("search", hashed, config.seed);

  const SearchResult result = search(seed_genome, config, [&](const GenerationLog& g) {
    err << "generation " << g.generation << " best_score " << std::setprecision(10)
        << g.best_score << " best_latency_ms " << g.best_latency_ms << " feasible "
        << g.feasible << "/" << g.evaluated << "\n";
  });

  json header_extra = manifest.stable_json();
  // The sidecar sits next to the archive; naming it by suffix keeps the
  // archive bytes independent of the output path.
  header_extra["manifest_suffix"] = manifest_path("");
  write_text_file(a.out, archive_to_ndjson(result, config, header_extra));
  if (!a.csv.empty()) {
    std::ostringstream csv;
    csv << "generation,evaluated,feasible,best_score,best_latency_ms\n"
        << std::setprecision(12);
    for (const GenerationLog& g : result.log) {
      csv << g.generation << "," << g.evaluated << "," << g.feasible << ","
          << g.best_score << "," << g.best_latency_ms << "\n";
    }
    write_text_file(a.csv, csv.str());
  }
  write_manifest(manifest, a.out);

  out << json{{"archive", a.out},
              {"entries", result.archive.size()},
              {"best_score", result.best.score.value},
              {"best_latency_ms", result.best.cost.latency_ms},
              {"best_flops", result.best.cost.flops},
              {"best_params", result.best.cost.params}}
             .dump(2)
      << "\n";
  return kExitOk;
}

// ---- cost / score / lower -----------------------------------------------

struct GraphArgs {
  std::string genome;
  int res = 0;
  std::string profile = "t4-like";
  bool strict = false;
  bool nodes = false;
  bool table = false;
  bool train = false;
  bool no_fold_bn = false;
  std::vector<double> weights;
  std::string out;
};

LoweringOptions lowering_of(const GraphArgs& a) {
  LoweringOptions o;
  o.deploy_reparam = !a.train;
  o.fold_bn = !a.no_fold_bn;
  return o;
}

int cmd_cost(const GraphArgs& a, std::ostream& out) {
  const DetectorGenome g = load_genome_with_res(a.genome, a.res);
  const DeviceProfile profile = load_profile(a.profile);
  CostOptions options;
  options.strict = a.strict;
  const CostReport report = evaluate_cost(build_graph(g, lowering_of(a)), profile, options);
  if (a.table) {
    out << format_cost_table(report);
    return kExitOk;
  }
  json doc = cost_report_to_json(report, a.nodes);
  doc["genome"] = g.name;
  doc["input_res"] = {g.input_h, g.input_w};
  doc["manifest"] =
      start_manifest("cost", genome_to_json(g).dump() + profile_to_json(profile).dump())
          .stable_json();
  out << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_score(const GraphArgs& a, std::ostream& out) {
  const DetectorGenome g = load_genome_with_res(a.genome, a.res);
  ProxyOptions options;
  options.scale_weights = a.weights;
  const ProxyScore score = entropy_score(build_graph(g, lowering_of(a)), options);
  json doc = proxy_score_to_json(score);
  doc["genome"] = g.name;
  doc["manifest"] = start_manifest("score", genome_to_json(g).dump()).stable_json();
  out << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_lower(const GraphArgs& a, std::ostream& out) {
  const DetectorGenome g = load_genome_with_res(a.genome, a.res);
  const std::string text = build_graph(g, lowering_of(a)).to_ndjson();
  if (a.out.empty()) {
    out << text;
    return kExitOk;
  }
  RunManifest m = start_manifest("lower", genome_to_json(g).dump());
  write_text_file(a.out, text);
  write_manifest(m, a.out);
  return kExitOk;
}

// ---- assign -------------------------------------------------------------

struct AssignArgs {
  std::string input, out;
  bool center_prior = false;
  std::string solver = "dynamic-k";
};

int cmd_assign(const AssignArgs& a, std::ostream& out, std::ostream& err) {
  const json doc = read_json_file(a.input);
  const std::vector<AssignImage> images = images_from_json(doc);
  AlignCostOptions cost_options;
  cost_options.center_prior = a.center_prior;
  std::unique_ptr<Assigner> assigner;
  if (a.solver == "dynamic-k") {
    assigner = std::make_unique<DynamicKAssigner>();
  } else if (a.solver == "sinkhorn") {
    assigner = std::make_unique<SinkhornAssigner>();
  } else {
    throw InputError("unknown solver '" + a.solver + "'");
  }

  std::string text;
  for (size_t i = 0; i < images.size(); ++i) {
    const CostMatrix m =
        align_cost(images[i].ground_truths, images[i].predictions, cost_options);
    const AssignmentResult r = assigner->assign(m);
    for (int g : r.empty_gts) {
      err << "warning: image " << i << " ground truth " << g << " has no candidate\n";
    }
    text += assignment_to_json(r, i).dump() + "\n";
  }
  if (a.out.empty()) {
    out << text;
    return kExitOk;
  }
  RunManifest m = start_manifest("assign", doc.dump() + a.solver +
                                               (a.center_prior ? "+center" : ""));
  write_text_file(a.out, text);
  write_manifest(m, a.out);
  return kExitOk;
}

// ---- loss ---------------------------------------------------------------

LossWeights weights_from_json(const json& doc) {
  LossWeights w;
  if (!doc.is_object()) throw SchemaError("weights", "expected an object");
  if (doc.contains("qfl")) w.qfl = number_field(doc, "qfl", "weights");
  if (doc.contains("dfl")) w.dfl = number_field(doc, "dfl", "weights");
  if (doc.contains("giou")) w.giou = number_field(doc, "giou", "weights");
  return w;
}

LossComponents components_from_samples(const json& samples) {
  if (!samples.is_array()) throw SchemaError("samples", "expected an array");
  double qsum = 0.0, dsum = 0.0, gsum = 0.0;
  int qn = 0, dn = 0, gn = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const json& s = samples[i];
    const std::string path = "samples[" + std::to_string(i) + "]";
    if (!s.is_object()) throw SchemaError(path, "expected an object");
    if (s.contains("pred_prob") || s.contains("target_q")) {
      const double beta = s.contains("beta") ? number_field(s, "beta", path) : 2.0;
      qsum += qfl(number_field(s, "pred_prob", path), number_field(s, "target_q", path),
                  beta);
      ++qn;
    }
    if (s.contains("bin_probs") || s.contains("target_y")) {
      if (!s.contains("bin_probs") || !s["bin_probs"].is_array()) {
        throw SchemaError(path + ".bin_probs", "expected an array");
      }
      std::vector<double> probs;
      for (const json& p : s["bin_probs"]) {
        if (!p.is_number()) throw SchemaError(path + ".bin_probs", "expected numbers");
        probs.push_back(p.get<double>());
      }
      dsum += dfl(probs, number_field(s, "target_y", path));
      ++dn;
    }
    if (s.contains("pred_box") || s.contains("gt_box")) {
      gsum += giou_loss(box_from_json(s.value("pred_box", json()), path + ".pred_box"),
                        box_from_json(s.value("gt_box", json()), path + ".gt_box"));
      ++gn;
    }
  }
  LossComponents c;
  if (qn > 0) c.qfl = qsum / qn;
  if (dn > 0) c.dfl = dsum / dn;
  if (gn > 0) c.giou = gsum / gn;
  return c;
}

DistillSchedule schedule_from_json(const json& doc) {
  DistillSchedule s;
  if (!doc.is_object()) throw SchemaError("schedule", "expected an object");
  auto get_int = [&](const char* key, int& v) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number_integer()) {
      throw SchemaError(std::string("schedule.") + key, "expected an integer");
    }
    v = doc[key].get<int>();
  };
  get_int("stage1_epochs", s.stage1_epochs);
  get_int("stage2_epochs", s.stage2_epochs);
  if (doc.contains("w_start")) s.w_start = number_field(doc, "w_start", "schedule");
  if (doc.contains("w_end")) s.w_end = number_field(doc, "w_end", "schedule");
  if (doc.contains("mode")) {
    const std::string mode = doc["mode"].is_string() ? doc["mode"].get<std::string>() : "";
    if (mode == "cosine") {
      s.mode = ScheduleMode::kCosine;
    } else if (mode == "constant") {
      s.mode = ScheduleMode::kConstant;
    } else {
      throw SchemaError("schedule.mode", "expected \"cosine\" or \"constant\"");
    }
  }
  return s;
}

double distill_from_json(const json& d, const std::string& input_path) {
  if (d.is_number()) return d.get<double>();
  if (!d.is_object() || !d.contains("teacher") || !d.contains("student") ||
      !d["teacher"].is_string() || !d["student"].is_string()) {
    throw SchemaError("distill", "expected a number or {teacher, student} file paths");
  }
  const Tensor4 teacher =
      read_raw_tensor(relative_to(input_path, d["teacher"].get<std::string>()));
  Tensor4 student = read_raw_tensor(relative_to(input_path, d["student"].get<std::string>()));
  if (d.contains("projection")) {
    student = align_project(student, teacher.shape(),
                            conv_params_from_json(d["projection"], "distill.projection"));
  }
  const std::string name = d.value("distiller", "cwd");
  return make_distiller(name)->loss(teacher, student);
}

int cmd_loss(const std::string& input, std::ostream& out) {
  const json doc = read_json_file(input);
  if (!doc.is_object()) throw SchemaError("$", "expected an object");
  const LossWeights weights =
      doc.contains("weights") ? weights_from_json(doc["weights"]) : LossWeights{};
  LossComponents c;
  if (doc.contains("components")) {
    const json& cj = doc["components"];
    if (!cj.is_object()) throw SchemaError("components", "expected an object");
    c.qfl = cj.contains("qfl") ? number_field(cj, "qfl", "components") : 0.0;
    c.dfl = cj.contains("dfl") ? number_field(cj, "dfl", "components") : 0.0;
    c.giou = cj.contains("giou") ? number_field(cj, "giou", "components") : 0.0;
  } else if (doc.contains("samples")) {
    c = components_from_samples(doc["samples"]);
  } else {
    throw SchemaError("components", "need components or samples");
  }

  double distill = 0.0, weight = 0.0;
  if (doc.contains("distill")) {
    distill = distill_from_json(doc["distill"], input);
    if (doc.contains("distill_weight")) {
      weight = number_field(doc, "distill_weight", "$");
    } else if (doc.contains("epoch")) {
      if (!doc["epoch"].is_number_integer()) {
        throw SchemaError("epoch", "expected an integer");
      }
      const DistillSchedule s =
          doc.contains("schedule") ? schedule_from_json(doc["schedule"]) : DistillSchedule{};
      weight = distill_weight(doc["epoch"].get<int>(), s);
    } else {
      throw SchemaError("epoch", "distill needs epoch or distill_weight");
    }
  }

  const LossBreakdown b = compose_loss(c, weights, distill, weight);
  out << json{{"qfl", b.qfl},
              {"dfl", b.dfl},
              {"giou", b.giou},
              {"distill", b.distill},
              {"distill_weight", b.distill_weight},
              {"total", b.total},
              {"weights", {{"qfl", weights.qfl}, {"dfl", weights.dfl}, {"giou", weights.giou}}},
              {"manifest", start_manifest("loss", doc.dump()).stable_json()}}
             .dump(2)
      << "\n";
  return kExitOk;
}

// ---- fold ---------------------------------------------------------------

ConvBn conv_bn_from_json(const json& doc, const std::string& path) {
  if (!doc.is_object() || !doc.contains("conv") || !doc.contains("bn")) {
    throw SchemaError(path, "expected {conv, bn}");
  }
  return ConvBn{conv_params_from_json(doc["conv"], path + ".conv"),
                bn_params_from_json(doc["bn"], path + ".bn")};
}

int cmd_fold(const std::string& block, const std::string& out_path, std::ostream& out) {
  const json doc = read_json_file(block);
  if (!doc.is_object()) throw SchemaError("$", "expected an object");
  RepBranchParams p;
  p.conv3 = conv_bn_from_json(doc.value("conv3", json()), "conv3");
  p.conv1 = conv_bn_from_json(doc.value("conv1", json()), "conv1");
  if (doc.contains("identity_bn") && !doc["identity_bn"].is_null()) {
    p.identity_bn = bn_params_from_json(doc["identity_bn"], "identity_bn");
  }
  const ConvParams folded = reparam_fold(p);
  json result{{"folded", conv_params_to_json(folded)}};
  if (doc.contains("input")) {
    const Tensor4 x = tensor_from_json(doc["input"], "input");
    const double diff = max_abs_diff(rep_branch_forward(x, p), conv2d_forward(x, folded));
    result["replay"] = {{"max_abs_diff", diff}};
    if (!(diff < 1e-3)) {
      throw InvariantError("folded conv disagrees with the branches by " +
                           std::to_string(diff));
    }
  }
  RunManifest m = start_manifest("fold", doc.dump());
  if (out_path.empty()) {
    result["manifest"] = m.stable_json();
    out << result.dump() << "\n";
    return kExitOk;
  }
  write_text_file(out_path, result.dump() + "\n");
  write_manifest(m, out_path);
  return kExitOk;
}

}  // namespace

nlohmann::json RunManifest::stable_json() const {
  return json{{"command", command},
              {"config_hash", config_hash},
              {"seed", seed},
              {"version", version}};
}

nlohmann::json RunManifest::to_json() const {
  json doc = stable_json();
  doc["started_at"] = started_at;
  doc["finished_at"] = finished_at;
  return doc;
}

std::string fnv1a_hex(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

std::string manifest_path(const std::string& output) {
  return output + ".manifest.json";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"detkit: detector design toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SearchArgs search_args;
  CLI::App* search_cmd = app.add_subcommand("search", "Budgeted evolutionary search");
  search_cmd->add_option("--space", search_args.space, "Seed genome JSON")->required();
  search_cmd->add_option("--config", search_args.config, "Search config JSON")->required();
  search_cmd->add_option("--out", search_args.out, "Archive NDJSON output")->required();
  search_cmd->add_option("--csv", search_args.csv, "Per-generation CSV output");
  search_cmd->add_option("--seed", search_args.seed, "Override the config seed");
  search_cmd->add_option("--budget", search_args.budget, "Override latency_budget_ms");
  search_cmd->add_option("--threads", search_args.threads, "Worker threads, 0 = auto");

  GraphArgs graph_args;
  auto add_graph_flags = [&](CLI::App* c) {
    c->add_option("--genome", graph_args.genome, "Genome JSON")->required();
    c->add_option("--res", graph_args.res, "Square input resolution override");
    c->add_flag("--train", graph_args.train, "Lower RepConvs as multi-branch blocks");
    c->add_flag("--no-fold-bn", graph_args.no_fold_bn, "Keep BatchNorm nodes");
  };
  CLI::App* cost_cmd = app.add_subcommand("cost", "FLOPs, params and latency");
  add_graph_flags(cost_cmd);
  cost_cmd->add_option("--profile", graph_args.profile,
                       "Device profile JSON or t4-like / x86-like");
  cost_cmd->add_flag("--strict", graph_args.strict, "Also count BN and activations");
  cost_cmd->add_flag("--nodes", graph_args.nodes, "Include per-node costs");
  cost_cmd->add_flag("--table", graph_args.table, "Print a text table instead of JSON");

  CLI::App* score_cmd = app.add_subcommand("score", "Entropy proxy score");
  add_graph_flags(score_cmd);
  score_cmd->add_option("--weights", graph_args.weights, "Per-scale weights")
      ->delimiter(',');

  CLI::App* lower_cmd = app.add_subcommand("lower", "Lowered operator graph as NDJSON");
  add_graph_flags(lower_cmd);
  lower_cmd->add_option("--out", graph_args.out, "Output file, default stdout");

  AssignArgs assign_args;
  CLI::App* assign_cmd = app.add_subcommand("assign", "Aligned OTA label assignment");
  assign_cmd->add_option("--input", assign_args.input, "Images JSON")->required();
  assign_cmd->add_option("--out", assign_args.out, "Output NDJSON, default stdout");
  assign_cmd->add_flag("--center-prior", assign_args.center_prior,
                       "Require anchor points inside the GT box");
  assign_cmd->add_option("--solver", assign_args.solver, "dynamic-k or sinkhorn");

  std::string loss_input;
  CLI::App* loss_cmd = app.add_subcommand("loss", "Evaluate detection and distillation losses");
  loss_cmd->add_option("--input", loss_input, "Loss input JSON")->required();

  std::string fold_block, fold_out;
  CLI::App* fold_cmd = app.add_subcommand("fold", "Fold a RepConv block into one conv");
  fold_cmd->add_option("--block", fold_block, "Branch parameters JSON")->required();
  fold_cmd->add_option("--out", fold_out, "Output JSON, default stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*search_cmd) return cmd_search(search_args, out, err);
    if (*cost_cmd) return cmd_cost(graph_args, out);
    if (*score_cmd) return cmd_score(graph_args, out);
    if (*lower_cmd) return cmd_lower(graph_args, out);
    if (*assign_cmd) return cmd_assign(assign_args, out, err);
    if (*loss_cmd) return cmd_loss(loss_input, out);
    if (*fold_cmd) return cmd_fold(fold_block, fold_out, out);
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const InvariantError& e) {
    err << "invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitInput;
}

}  // namespace detkit::cli
