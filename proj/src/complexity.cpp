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

#include "fasternam/complexity.hpp"

#include "fasternam/error.hpp"

namespace fasternam {

namespace {

constexpr std::int64_t kBatchNormFlops = 2;
constexpr std::int64_t kNamGateFlops = 8;

std::int64_t pw_params(std::int64_t c_in, std::int64_t c_out) {
  return c_out * c_in + c_out;
}

}  // namespace

std::string_view cost_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kFasterNet:
      return "fasternet_block";
    case LayerKind::kResidualEnd:
      return "residual_add";
    default:
      return keyword(kind);
  }
}

std::int64_t conv_flops(const ConvSpec& spec, Index out_h, Index out_w) {
  return spec.c_in * spec.c_out * spec.k * spec.k * out_h * out_w;
}

PConvCost pconv_cost(const PConvSpec& spec, Index out_h, Index out_w) {
  spec.validate();
  const double p = spec.partial_ratio();
  return {conv_flops(spec.conv_spec(), out_h, out_w), p * p};
}

LayerCost layer_cost(const LayerNode& node, const ShapeCHW& in) {
  LayerCost cost;
  cost.layer_kind = node.kind;
  const std::int64_t hw = in.h * in.w;
  const std::int64_t elems = in.c * hw;
  ShapeCHW out = in;
  switch (node.kind) {
    case LayerKind::kConv: {
      const ConvSpec spec{node.at("cin"), node.at("cout"), node.at("k"),
                          node.at("s"), node.at("p")};
      out = {spec.c_out, spec.out_dim(in.h), spec.out_dim(in.w)};
      cost.params = spec.c_out * spec.c_in * spec.k * spec.k + spec.c_out;
      cost.flops = conv_flops(spec, out.h, out.w);
      break;
    }
    case LayerKind::kPWConv: {
      const std::int64_t c_out = node.at("cout");
      out.c = c_out;
      cost.params = pw_params(in.c, c_out);
      cost.flops = in.c * c_out * hw;
      break;
    }
    case LayerKind::kPConv: {
      const PConvSpec spec{node.at("c"), node.at("cp"), node.at("k")};
      cost.params = spec.c_p * spec.c_p * spec.k * spec.k;
      cost.flops = pconv_cost(spec, in.h, in.w).flops;
      break;
    }
    case LayerKind::kBatchNorm:
      cost.params = 2 * in.c;
      cost.flops = kBatchNormFlops * elems;
      break;
    case LayerKind::kReLU:
      cost.flops = elems;
      break;
    case LayerKind::kNamChannel:
      cost.params = 2 * in.c;
      cost.flops = kNamGateFlops * elems;
      break;
    case LayerKind::kNamSpatial:
      cost.params = 2 * hw;
      cost.flops = kNamGateFlops * elems;
      break;
    case LayerKind::kFasterNet: {
      const FasterNetSpec spec{node.at("c"), node.at("cp"), node.at("k"),
                               node.at("e")};
      const std::int64_t hid = spec.hidden();
      const PConvSpec pc = spec.pconv_spec();
      cost.params = pc.c_p * pc.c_p * pc.k * pc.k   // pconv
                    + pw_params(in.c, hid)          // pw1
                    + 2 * hid                       // bn1
                    + pw_params(hid, in.c);         // pw2
      cost.flops = pconv_cost(pc, in.h, in.w).flops  //
                   + in.c * hid * hw                 // pw1
                   + kBatchNormFlops * hid * hw      // bn1
                   + hid * hw                        // relu
                   + hid * in.c * hw                 // pw2
                   + elems;                          // residual add
      break;
    }
    case LayerKind::kResidualBegin:
      break;
    case LayerKind::kResidualEnd:
      cost.flops = elems;
      break;
    case LayerKind::kGapHead: {
      const std::int64_t classes = node.at("classes");
      out = {classes, 1, 1};
      cost.params = pw_params(in.c, classes);
      cost.flops = elems + in.c * classes;
      break;
    }
  }
  cost.out_shape = out;
  return cost;
}

ComplexityReport analyze_graph(const GraphSpec& graph) {
  return analyze_graph(graph, graph.input_shape);
}

ComplexityReport analyze_graph(const GraphSpec& graph,
                               const ShapeCHW& input_shape) {
  const std::vector<ShapeCHW> shapes = propagate_shapes(graph, input_shape);
  ComplexityReport report;
  report.graph_name = graph.name;
  ShapeCHW in = input_shape;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    LayerCost cost = layer_cost(graph.layers[i], in);
    cost.layer_id = std::to_string(i) + ":" + std::string(keyword(cost.layer_kind));
    report.total_params += cost.params;
    report.total_flops += cost.flops;
    in = shapes[i];
    report.rows.push_back(std::move(cost));
  }
  return report;
}

DiffReport compare_totals(std::int64_t base_params, std::int64_t new_params,
                          std::int64_t base_flops, std::int64_t new_flops) {
  if (base_params == 0 || base_flops == 0) {
    throw DegenerateInputError(
        "cannot compute relative change against a zero baseline total");
  }
  DiffReport d{base_params, new_params, base_flops, new_flops, 0.0, 0.0};
  d.param_delta_pct = static_cast<double>(base_params - new_params) /
                      static_cast<double>(base_params) * 100.0;
  d.flops_delta_pct = static_cast<double>(base_flops - new_flops) /
                      static_cast<double>(base_flops) * 100.0;
  return d;
}

DiffReport compare_reports(const ComplexityReport& base,
                           const ComplexityReport& next) {
  return compare_totals(base.total_params, next.total_params, base.total_flops,
                        next.total_flops);
}

}  // namespace fasternam
