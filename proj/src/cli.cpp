// Copyright 2026 The FasterNAM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fasternam/cli.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "fasternam/complexity.hpp"
#include "fasternam/error.hpp"
#include "fasternam/gradient_suite.hpp"
#include "fasternam/graph.hpp"
#include "fasternam/metrics.hpp"
#include "fasternam/train.hpp"

namespace fasternam {

namespace {

using nlohmann::json;

json shape_json(const ShapeCHW& s) { return json::array({s.c, s.h, s.w}); }

json report_json(const ComplexityReport& r, const ShapeCHW& input) {
  json layers = json::array();
  for (const LayerCost& row : r.rows) {
    layers.push_back({{"id", row.layer_id},
                      {"kind", std::string(cost_kind_name(row.layer_kind))},
                      {"params", row.params},
                      {"flops", row.flops},
                      {"out_shape", shape_json(row.out_shape)}});
  }
  return {{"name", r.graph_name},
          {"input_shape", shape_json(input)},
          {"layers", layers},
          {"total_params", r.total_params},
          {"total_flops", r.total_flops}};
}

json diff_json(const DiffReport& d) {
  return {{"base_params", d.base_params},
          {"new_params", d.new_params},
          {"base_flops", d.base_flops},
          {"new_flops", d.new_flops},
          {"param_delta_pct", d.param_delta_pct},
          {"flops_delta_pct", d.flops_delta_pct}};
}

std::string threshold_label(double t) {
  // 0.5 -> ".5", 0.75 -> ".75"
  std::string s = fmt::format("{:.2f}", t);
  while (s.back() == '0') s.pop_back();
  if (s.front() == '0') s.erase(0, 1);
  return s;
}

void print_report(std::ostream& out, const ComplexityReport& r,
                  const ShapeCHW& input) {
  fmt::print(out, "model {}  input {}\n", r.graph_name, to_string(input));
  fmt::print(out, "{:<18} {:<16} {:>12} {:>16}  {}\n", "layer", "kind", "params",
             "flops", "out");
  for (const LayerCost& row : r.rows) {
    fmt::print(out, "{:<18} {:<16} {:>12} {:>16}  {}\n", row.layer_id,
               cost_kind_name(row.layer_kind), row.params, row.flops,
               to_string(row.out_shape));
  }
  fmt::print(out, "total_params {} ({:.3f} M)\n", r.total_params,
             static_cast<double>(r.total_params) / 1e6);
  fmt::print(out, "total_flops {} ({:.3f} GFLOPs, multiply-accumulates)\n",
             r.total_flops, static_cast<double>(r.total_flops) / 1e9);
}

int run_analyze(const std::string& path, bool as_json, std::ostream& out) {
  const GraphSpec graph = load_model_config(path);
  const ComplexityReport report = analyze_graph(graph);
  if (as_json) {
    out << report_json(report, graph.input_shape).dump(2) << "\n";
  } else {
    print_report(out, report, graph.input_shape);
  }
  return kExitOk;
}

int run_compare(const std::string& base_path, const std::string& new_path,
                bool as_json, std::ostream& out) {
  const GraphSpec base = load_model_config(base_path);
  const GraphSpec next = load_model_config(new_path);
  const ComplexityReport rb = analyze_graph(base);
  const ComplexityReport rn = analyze_graph(next);
  const DiffReport d = compare_reports(rb, rn);
  if (as_json) {
    json j = diff_json(d);
    j["base_name"] = base.name;
    j["new_name"] = next.name;
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  fmt::print(out, "base {:<22} params {:>10} ({:.3f} M)  flops {:>14} ({:.3f} G)\n",
             base.name, d.base_params, d.base_params / 1e6, d.base_flops,
             d.base_flops / 1e9);
  fmt::print(out, "new  {:<22} params {:>10} ({:.3f} M)  flops {:>14} ({:.3f} G)\n",
             next.name, d.new_params, d.new_params / 1e6, d.new_flops,
             d.new_flops / 1e9);
  auto verb = [](double pct) { return pct >= 0 ? "reduced" : "increased"; };
  fmt::print(out, "parameters {} by {:.2f}%\n", verb(d.param_delta_pct),
             std::abs(d.param_delta_pct));
  fmt::print(out, "GFLOPs {} by {:.2f}%\n", verb(d.flops_delta_pct),
             std::abs(d.flops_delta_pct));
  return kExitOk;
}

int run_gradcheck(std::uint64_t seed, double tol, std::ostream& out) {
  const std::vector<GradReport> reports = run_gradient_suite(seed, tol);
  bool all = true;
  for (const GradReport& r : reports) {
    fmt::print(out, "{:<30} max_rel_error {:.3e}  checked {:>5}  {}\n",
               r.unit_name, r.max_rel_error, r.param_count_checked,
               r.passed ? "PASS" : "FAIL");
    all = all && r.passed;
  }
  fmt::print(out, "{} ({} units, tolerance {:g})\n",
             all ? "all gradients verified" : "gradient check FAILED",
             reports.size(), tol);
  return all ? kExitOk : kExitValidation;
}

int run_evaluate(const std::string& gt_path, const std::string& det_path,
                 double iou, bool range, bool as_json, std::ostream& out) {
  const std::vector<GroundTruth> gts = load_ground_truth(gt_path);
  const std::vector<Detection> dets = load_detections(det_path);
  const EvalResult at = evaluate(dets, gts, {iou});
  std::optional<EvalResult> full;
  if (range) full = evaluate(dets, gts, coco_iou_thresholds());

  if (as_json) {
    json per_cat = json::object();
    for (const auto& [cat, aps] : at.per_category_ap) {
      per_cat[std::to_string(cat)] = aps.front();
    }
    json j = {{"iou", iou},
              {"map", at.map5095},
              {"map50", at.map50},
              {"precision", at.precision},
              {"precision_defined", at.precision_defined},
              {"recall", at.recall},
              {"per_category_ap", per_cat}};
    if (full) j["map5095"] = full->map5095;
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  fmt::print(out, "categories {}  detections {}  ground truth {}\n",
             at.per_category_ap.size(), dets.size(), gts.size());
  for (const auto& [cat, aps] : at.per_category_ap) {
    fmt::print(out, "  category {:<6} AP@{} {:.4f}\n", cat, threshold_label(iou),
               aps.front());
  }
  fmt::print(out, "mAP@{}: {:.4f}\n", threshold_label(iou), at.map5095);
  if (full) fmt::print(out, "mAP@.5:.95: {:.4f}\n", full->map5095);
  if (at.precision_defined) {
    fmt::print(out, "precision@.5: {:.4f}\n", at.precision);
  } else {
    fmt::print(out, "precision@.5: undefined (no detections)\n");
  }
  fmt::print(out, "recall@.5: {:.4f}\n", at.recall);
  return kExitOk;
}

int run_train_demo(const std::string& path, std::int64_t steps, double lr,
                   std::uint64_t seed, std::int64_t tail, std::ostream& out) {
  const GraphSpec graph = load_model_config(path);
  const TrainLog log = run_demo_train(graph, seed, steps, lr);
  const std::size_t first =
      log.size() > static_cast<std::size_t>(tail) ? log.size() - tail : 0;
  for (std::size_t i = first; i < log.size(); ++i) {
    fmt::print(out, "step {:>5} loss {:.6f}\n", log[i].step, log[i].loss);
  }
  const double initial = log.front().loss;
  const double final_loss = log.back().loss;
  fmt::print(out, "initial_loss {:.6f} final_loss {:.6f} ratio {:.4f}\n", initial,
             final_loss, final_loss / initial);
  return kExitOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  CLI::App app{"FasterNet/NAM building blocks, cost analyzer, and detection metrics",
               "fasternam"};
  app.require_subcommand(1);

  std::string cfg, base_cfg, new_cfg, gt_path, det_path;
  bool as_json = false;
  bool range = false;
  std::uint64_t seed = 7;
  double tol = 1e-4;
  double iou = 0.5;
  std::int64_t steps = 200;
  double lr = 0.05;
  std::int64_t tail = 10;

  CLI::App* analyze = app.add_subcommand("analyze", "per-layer parameter/FLOP report");
  analyze->add_option("cfg", cfg, "model config")->required();
  analyze->add_flag("--json", as_json, "JSON output");

  CLI::App* compare = app.add_subcommand("compare", "relative complexity of two configs");
  compare->add_option("base", base_cfg, "baseline config")->required();
  compare->add_option("new", new_cfg, "candidate config")->required();
  compare->add_flag("--json", as_json, "JSON output");

  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  grad->add_option("--seed", seed, "random seed");
  grad->add_option("--tol", tol, "max relative error")->check(CLI::PositiveNumber);

  CLI::App* eval = app.add_subcommand("evaluate", "detection precision/recall/mAP");
  eval->add_option("--gt", gt_path, "ground-truth file")->required();
  eval->add_option("--det", det_path, "detection file")->required();
  eval->add_option("--iou", iou, "IoU threshold")->check(CLI::Range(1e-9, 1.0));
  eval->add_flag("--range", range, "also report mAP@.5:.95");
  eval->add_flag("--json", as_json, "JSON output");

  CLI::App* train = app.add_subcommand("train-demo", "gradient-descent sanity run");
  train->add_option("cfg", cfg, "model config ending in gap_head classes=2")->required();
  train->add_option("--steps", steps, "optimization steps");
  train->add_option("--lr", lr, "learning rate");
  train->add_option("--seed", seed, "random seed");
  train->add_option("--tail", tail, "log lines to print")->check(CLI::NonNegativeNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitIoOrParse;
  }

  try {
    if (analyze->parsed()) return run_analyze(cfg, as_json, out);
    if (compare->parsed()) return run_compare(base_cfg, new_cfg, as_json, out);
    if (grad->parsed()) return run_gradcheck(seed, tol, out);
    if (eval->parsed()) return run_evaluate(gt_path, det_path, iou, range, as_json, out);
    if (train->parsed()) return run_train_demo(cfg, steps, lr, seed, tail, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitIoOrParse;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIoOrParse;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DegenerateInputError& e) {
    err << "degenerate input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitIoOrParse;
}

}  // namespace fasternam
