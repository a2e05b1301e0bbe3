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

#include "fasternam/model.hpp"

#include <random>

#include "fasternam/error.hpp"

namespace fasternam {

Model::Model(GraphSpec graph, std::vector<std::unique_ptr<Layer>> layers)
    : graph_(std::move(graph)), layers_(std::move(layers)) {}

Tensor Model::forward(const Tensor& x, Mode mode, OpCounter* counter) {
  const ShapeCHW in{x.c(), x.h(), x.w()};
  if (!(in == graph_.input_shape)) {
    throw ValidationError("model '" + graph_.name + "' expects input " +
                          to_string(graph_.input_shape) + " per sample, got " +
                          to_string(in));
  }
  last_shapes_.clear();
  Tensor cur = x;
  for (auto& layer : layers_) {
    cur = layer->forward(cur, mode, counter);
    last_shapes_.push_back(cur.shape());
  }
  return cur;
}

Tensor Model::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = (*it)->backward(g);
  }
  return g;
}

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> all;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (ParamRef& p : layers_[i]->parameters()) {
      p.name = std::to_string(i) + "." + p.name;
      all.push_back(std::move(p));
    }
  }
  return all;
}

void Model::zero_grad() {
  for (auto& layer : layers_) layer->zero_grad();
}

Model build_model(const GraphSpec& graph, std::uint64_t seed) {
  const std::vector<ShapeCHW> shapes = propagate_shapes(graph);
  std::mt19937_64 seeder(seed);
  std::vector<std::unique_ptr<Layer>> layers;
  std::vector<ResidualBeginLayer*> open;
  ShapeCHW in = graph.input_shape;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerNode& node = graph.layers[i];
    const std::uint64_t layer_seed = seeder();
    std::unique_ptr<Layer> layer;
    switch (node.kind) {
      case LayerKind::kConv: {
        const ConvSpec spec{node.at("cin"), node.at("cout"), node.at("k"),
                            node.at("s"), node.at("p")};
        layer = std::make_unique<ConvLayer>(spec, init_params(spec, layer_seed));
        break;
      }
      case LayerKind::kPWConv:
        layer = std::make_unique<PWConvLayer>(
            init_params(PWConvSpec{node.at("cin"), node.at("cout")}, layer_seed));
        break;
      case LayerKind::kPConv: {
        const PConvSpec spec{node.at("c"), node.at("cp"), node.at("k")};
        layer = std::make_unique<PConvLayer>(spec, init_params(spec, layer_seed));
        break;
      }
      case LayerKind::kBatchNorm:
        layer = std::make_unique<BatchNormLayer>(
            BNParams<double>::identity(node.at("c")));
        break;
      case LayerKind::kReLU:
        layer = std::make_unique<ReLULayer>();
        break;
      case LayerKind::kNamChannel:
        layer = std::make_unique<NamChannelLayer>(
            NAMChannelParams<double>::identity(node.at("c")));
        break;
      case LayerKind::kNamSpatial:
        layer = std::make_unique<NamSpatialLayer>(
            NAMSpatialParams<double>::identity(node.at("h"), node.at("w")));
        break;
      case LayerKind::kFasterNet: {
        const FasterNetSpec spec{node.at("c"), node.at("cp"), node.at("k"),
                                 node.at("e")};
        layer = std::make_unique<FasterNetLayer>(init_params(spec, layer_seed));
        break;
      }
      case LayerKind::kResidualBegin: {
        auto begin = std::make_unique<ResidualBeginLayer>();
        open.push_back(begin.get());
        layer = std::move(begin);
        break;
      }
      case LayerKind::kResidualEnd:
        layer = std::make_unique<ResidualEndLayer>(open.back());
        open.pop_back();
        break;
      case LayerKind::kGapHead:
        layer = std::make_unique<GapHeadLayer>(
            init_params(PWConvSpec{in.c, node.at("classes")}, layer_seed));
        break;
    }
    layers.push_back(std::move(layer));
    in = shapes[i];
  }
  return Model(graph, std::move(layers));
}

}  // namespace fasternam
