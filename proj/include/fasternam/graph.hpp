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

// Line-oriented model description:
//
//   # comment
//   name tiny
//   input 3 32 32
//   conv cin=3 cout=16 k=3 s=1 p=1
//   bn c=16
//   relu
//   residual_begin
//   fasternet c=16 cp=4 e=2
//   residual_end
//   nam_channel c=16
//
// Every layer line is a kind keyword followed by key=value integer
// attributes. Parsing validates channel continuity and spatial sizes.

#ifndef FASTERNAM_GRAPH_HPP_
#define FASTERNAM_GRAPH_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fasternam/tensor.hpp"

namespace fasternam {

enum class LayerKind {
  kConv,
  kPWConv,
  kPConv,
  kBatchNorm,
  kReLU,
  kNamChannel,
  kNamSpatial,
  kFasterNet,
  kResidualBegin,
  kResidualEnd,
  kGapHead,
};

// DSL keyword ("conv", "fasternet", ...).
std::string_view keyword(LayerKind kind);
std::optional<LayerKind> kind_from_keyword(std::string_view word);

struct ShapeCHW {
  Index c = 1;
  Index h = 1;
  Index w = 1;

  bool operator==(const ShapeCHW&) const = default;
};

std::string to_string(const ShapeCHW& s);

struct LayerNode {
  LayerKind kind = LayerKind::kReLU;
  std::map<std::string, std::int64_t> attrs;
  int line = 0;  // source line, 0 when built in code

  std::int64_t at(const std::string& key) const;

  // Source line is not part of a layer's identity.
  bool operator==(const LayerNode& other) const {
    return kind == other.kind && attrs == other.attrs;
  }
};

struct GraphSpec {
  std::string name = "model";
  ShapeCHW input_shape;
  std::vector<LayerNode> layers;

  bool operator==(const GraphSpec&) const = default;
};

// Parses and validates. Syntax problems raise ParseError; well-formed
// layers that do not compose raise ValidationError. Both carry the line.
GraphSpec parse_model_config(std::string_view text);

// Reads and parses a config file; unreadable files raise IoError.
GraphSpec load_model_config(const std::filesystem::path& path);

std::string serialize_model_config(const GraphSpec& graph);

// Output shape after each layer. Throws ValidationError naming the layer
// on any channel or spatial inconsistency.
std::vector<ShapeCHW> propagate_shapes(const GraphSpec& graph);
std::vector<ShapeCHW> propagate_shapes(const GraphSpec& graph,
                                       const ShapeCHW& input_shape);

}  // namespace fasternam

#endif  // FASTERNAM_GRAPH_HPP_
