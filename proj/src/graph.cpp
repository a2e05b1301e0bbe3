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

#include "fasternam/graph.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fasternam/blocks.hpp"
#include "fasternam/error.hpp"
#include "fasternam/ops.hpp"

namespace fasternam {

namespace {

struct AttrSpec {
  std::string_view key;
  std::optional<std::int64_t> fallback;
};

struct KindInfo {
  LayerKind kind;
  std::string_view word;
  std::vector<AttrSpec> attrs;
};

const std::vector<KindInfo>& kind_table() {
  static const std::vector<KindInfo> table = {
      {LayerKind::kConv, "conv",
       {{"cin", {}}, {"cout", {}}, {"k", {}}, {"s", {}}, {"p", {}}}},
      {LayerKind::kPWConv, "pwconv", {{"cin", {}}, {"cout", {}}}},
      {LayerKind::kPConv, "pconv", {{"c", {}}, {"cp", {}}, {"k", {}}}},
      {LayerKind::kBatchNorm, "bn", {{"c", {}}}},
      {LayerKind::kReLU, "relu", {}},
      {LayerKind::kNamChannel, "nam_channel", {{"c", {}}}},
      {LayerKind::kNamSpatial, "nam_spatial", {{"c", {}}, {"h", {}}, {"w", {}}}},
      {LayerKind::kFasterNet, "fasternet",
       {{"c", {}}, {"cp", {}}, {"e", 2}, {"k", 3}}},
      {LayerKind::kResidualBegin, "residual_begin", {}},
      {LayerKind::kResidualEnd, "residual_end", {}},
      {LayerKind::kGapHead, "gap_head", {{"classes", {}}}},
  };
  return table;
}

const KindInfo& info(LayerKind kind) {
  for (const KindInfo& k : kind_table()) {
    if (k.kind == kind) return k;
  }
  throw std::logic_error("unregistered layer kind");
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::optional<std::int64_t> to_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

LayerNode parse_layer(const std::vector<std::string_view>& tokens, int line) {
  const std::optional<LayerKind> kind = kind_from_keyword(tokens[0]);
  if (!kind) {
    throw ParseError(line, "unknown layer kind '" + std::string(tokens[0]) + "'");
  }
  const KindInfo& ki = info(*kind);
  LayerNode node{*kind, {}, line};
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const std::string_view tok = tokens[t];
    const std::size_t eq = tok.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ParseError(line, "expected key=value, got '" + std::string(tok) + "'");
    }
    const std::string key(tok.substr(0, eq));
    bool known = false;
    for (const AttrSpec& a : ki.attrs) known = known || a.key == key;
    if (!known) {
      throw ParseError(line, "unknown attribute '" + key + "' for " +
                                 std::string(ki.word));
    }
    const std::optional<std::int64_t> value = to_int(tok.substr(eq + 1));
    if (!value) {
      throw ParseError(line, "attribute '" + key + "' expects an integer, got '" +
                                 std::string(tok.substr(eq + 1)) + "'");
    }
    if (!node.attrs.emplace(key, *value).second) {
      throw ParseError(line, "duplicate attribute '" + key + "'");
    }
  }
  for (const AttrSpec& a : ki.attrs) {
    if (node.attrs.count(std::string(a.key))) continue;
    if (!a.fallback) {
      throw ParseError(line, "missing attribute '" + std::string(a.key) +
                                 "' for " + std::string(ki.word));
    }
    node.attrs.emplace(std::string(a.key), *a.fallback);
  }
  return node;
}

std::string where(const LayerNode& node, std::size_t index) {
  std::string s;
  if (node.line > 0) s = "line " + std::to_string(node.line) + ": ";
  return s + "layer " + std::to_string(index) + " (" +
         std::string(keyword(node.kind)) + "): ";
}

}  // namespace

std::string_view keyword(LayerKind kind) { return info(kind).word; }

std::optional<LayerKind> kind_from_keyword(std::string_view word) {
  for (const KindInfo& k : kind_table()) {
    if (k.word == word) return k.kind;
  }
  return std::nullopt;
}

std::string to_string(const ShapeCHW& s) {
  return "(" + std::to_string(s.c) + ", " + std::to_string(s.h) + ", " +
         std::to_string(s.w) + ")";
}

std::int64_t LayerNode::at(const std::string& key) const {
  const auto it = attrs.find(key);
  if (it == attrs.end()) {
    throw ValidationError(std::string(keyword(kind)) + " has no attribute '" +
                          key + "'");
  }
  return it->second;
}

std::vector<ShapeCHW> propagate_shapes(const GraphSpec& graph) {
  return propagate_shapes(graph, graph.input_shape);
}

std::vector<ShapeCHW> propagate_shapes(const GraphSpec& graph,
                                       const ShapeCHW& input_shape) {
  if (input_shape.c < 1 || input_shape.h < 1 || input_shape.w < 1) {
    throw ValidationError("input shape must be positive, got " +
                          to_string(input_shape));
  }
  std::vector<ShapeCHW> shapes;
  std::vector<ShapeCHW> open_residuals;
  ShapeCHW cur = input_shape;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerNode& node = graph.layers[i];
    auto fail = [&](const std::string& why) {
      throw ValidationError(where(node, i) + why);
    };
    auto expect_channels = [&](const char* key) {
      const std::int64_t c = node.at(key);
      if (c != cur.c) {
        fail("declares " + std::string(key) + "=" + std::to_string(c) +
             " but receives " + std::to_string(cur.c) + " channels");
      }
    };
    auto positive = [&](const char* key) {
      if (node.at(key) < 1) fail(std::string(key) + " must be >= 1");
    };
    try {
      switch (node.kind) {
        case LayerKind::kConv: {
          expect_channels("cin");
          const ConvSpec spec{node.at("cin"), node.at("cout"), node.at("k"),
                              node.at("s"), node.at("p")};
          spec.validate_input(cur.h, cur.w);
          cur = {spec.c_out, spec.out_dim(cur.h), spec.out_dim(cur.w)};
          break;
        }
        case LayerKind::kPWConv:
          expect_channels("cin");
          positive("cout");
          cur.c = node.at("cout");
          break;
        case LayerKind::kPConv:
          expect_channels("c");
          PConvSpec{node.at("c"), node.at("cp"), node.at("k")}.validate();
          break;
        case LayerKind::kBatchNorm:
        case LayerKind::kNamChannel:
          expect_channels("c");
          break;
        case LayerKind::kReLU:
          break;
        case LayerKind::kNamSpatial:
          expect_channels("c");
          if (node.at("h") != cur.h || node.at("w") != cur.w) {
            fail("bound to " + std::to_string(node.at("h")) + "x" +
                 std::to_string(node.at("w")) + " but receives " +
                 std::to_string(cur.h) + "x" + std::to_string(cur.w));
          }
          break;
        case LayerKind::kFasterNet:
          expect_channels("c");
          FasterNetSpec{node.at("c"), node.at("cp"), node.at("k"), node.at("e")}
              .validate();
          break;
        case LayerKind::kResidualBegin:
          open_residuals.push_back(cur);
          break;
        case LayerKind::kResidualEnd:
          if (open_residuals.empty()) fail("no matching residual_begin");
          if (!(open_residuals.back() == cur)) {
            fail("branch output " + to_string(cur) +
                 " does not match skip input " +
                 to_string(open_residuals.back()));
          }
          open_residuals.pop_back();
          break;
        case LayerKind::kGapHead:
          positive("classes");
          cur = {node.at("classes"), 1, 1};
          break;
      }
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      if (msg.rfind(where(node, i), 0) == 0) throw;
      fail(msg);
    }
    shapes.push_back(cur);
  }
  if (!open_residuals.empty()) {
    throw ValidationError("graph '" + graph.name + "' has " +
                          std::to_string(open_residuals.size()) +
                          " unclosed residual_begin");
  }
  return shapes;
}

GraphSpec parse_model_config(std::string_view text) {
  GraphSpec graph;
  bool have_input = false;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const std::vector<std::string_view> tokens = split_ws(line);
    if (tokens.empty()) continue;

    if (tokens[0] == "name") {
      if (tokens.size() != 2) throw ParseError(line_no, "expected 'name <word>'");
      graph.name = std::string(tokens[1]);
      continue;
    }
    if (tokens[0] == "input") {
      if (have_input) throw ParseError(line_no, "duplicate input header");
      if (!graph.layers.empty()) {
        throw ParseError(line_no, "input header must precede all layers");
      }
      if (tokens.size() != 4) throw ParseError(line_no, "expected 'input c h w'");
      std::array<std::int64_t, 3> dims{};
      for (std::size_t d = 0; d < 3; ++d) {
        const std::optional<std::int64_t> v = to_int(tokens[d + 1]);
        if (!v || *v < 1) {
          throw ParseError(line_no, "input dimensions must be positive integers");
        }
        dims[d] = *v;
      }
      graph.input_shape = {dims[0], dims[1], dims[2]};
      have_input = true;
      continue;
    }
    if (!have_input) {
      throw ParseError(line_no, "first statement must be 'input c h w'");
    }
    graph.layers.push_back(parse_layer(tokens, line_no));
  }
  if (!have_input) throw ParseError(line_no, "missing 'input c h w' header");
  propagate_shapes(graph);
  return graph;
}

GraphSpec load_model_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << file.rdbuf();
  GraphSpec graph = parse_model_config(buf.str());
  return graph;
}

std::string serialize_model_config(const GraphSpec& graph) {
  std::ostringstream out;
  out << "name " << graph.name << "\n";
  out << "input " << graph.input_shape.c << " " << graph.input_shape.h << " "
      << graph.input_shape.w << "\n";
  for (const LayerNode& node : graph.layers) {
    const KindInfo& ki = info(node.kind);
    out << ki.word;
    for (const AttrSpec& a : ki.attrs) {
      out << " " << a.key << "=" << node.at(std::string(a.key));
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace fasternam
