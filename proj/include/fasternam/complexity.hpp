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

// Static parameter and FLOP accounting for one image.
//
// FLOPs are multiply-accumulates: a k x k convolution producing an H x W map
// costs C_in * C_out * k^2 * H * W, bias adds excluded. Elementwise
// conventions per element:
//   bn 2, relu 1, residual add 1, global-average-pool 1,
//   nam gating 8 (bn 2 + weight multiply 1 + sigmoid 4 + gate multiply 1).
// Learnable parameter rules:
//   conv    c_out * c_in * k^2 + c_out
//   pwconv  c_out * c_in + c_out
//   pconv   c_p^2 * k^2 (no bias)
//   bn, nam 2 per normalized unit (gamma, beta)

#ifndef FASTERNAM_COMPLEXITY_HPP_
#define FASTERNAM_COMPLEXITY_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fasternam/blocks.hpp"
#include "fasternam/graph.hpp"
#include "fasternam/ops.hpp"

namespace fasternam {

struct LayerCost {
  std::string layer_id;
  LayerKind layer_kind = LayerKind::kReLU;
  std::int64_t params = 0;
  std::int64_t flops = 0;
  ShapeCHW out_shape;
};

// Report name for a cost row ("fasternet_block", "residual_add", ...).
std::string_view cost_kind_name(LayerKind kind);

struct ComplexityReport {
  std::string graph_name;
  std::vector<LayerCost> rows;
  std::int64_t total_params = 0;
  std::int64_t total_flops = 0;
};

struct DiffReport {
  std::int64_t base_params = 0;
  std::int64_t new_params = 0;
  std::int64_t base_flops = 0;
  std::int64_t new_flops = 0;
  double param_delta_pct = 0.0;  // positive = reduction
  double flops_delta_pct = 0.0;
};

struct PConvCost {
  std::int64_t flops = 0;
  double reduction_factor = 1.0;  // (c_p / c)^2
};

std::int64_t conv_flops(const ConvSpec& spec, Index out_h, Index out_w);

PConvCost pconv_cost(const PConvSpec& spec, Index out_h, Index out_w);

// Cost of a single layer fed with `in`.
LayerCost layer_cost(const LayerNode& node, const ShapeCHW& in);

ComplexityReport analyze_graph(const GraphSpec& graph);
ComplexityReport analyze_graph(const GraphSpec& graph,
                               const ShapeCHW& input_shape);

// Deltas are (base - new) / base * 100 and unrounded.
DiffReport compare_reports(const ComplexityReport& base,
                           const ComplexityReport& next);
DiffReport compare_totals(std::int64_t base_params, std::int64_t new_params,
                          std::int64_t base_flops, std::int64_t new_flops);

}  // namespace fasternam

#endif  // FASTERNAM_COMPLEXITY_HPP_
