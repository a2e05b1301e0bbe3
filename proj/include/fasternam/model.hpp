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

#ifndef FASTERNAM_MODEL_HPP_
#define FASTERNAM_MODEL_HPP_

#include <cstdint>
#include <memory>
#include <vector>

#include "fasternam/graph.hpp"
#include "fasternam/layers.hpp"

namespace fasternam {

// A GraphSpec instantiated as a sequence of trainable layers.
class Model {
 public:
  Model(GraphSpec graph, std::vector<std::unique_ptr<Layer>> layers);

  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  // x must be (n, c, h, w) with (c, h, w) equal to the graph input shape.
  Tensor forward(const Tensor& x, Mode mode, OpCounter* counter = nullptr);
  Tensor backward(const Tensor& grad_out);

  std::vector<ParamRef> parameters();
  void zero_grad();

  const GraphSpec& graph() const { return graph_; }
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }

  // Output shape of every layer during the latest forward pass.
  const std::vector<Shape4>& last_shapes() const { return last_shapes_; }

 private:
  GraphSpec graph_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Shape4> last_shapes_;
};

// Parameters are drawn by init_params from per-layer seeds derived from
// `seed`, so equal (graph, seed) pairs give bit-identical models.
Model build_model(const GraphSpec& graph, std::uint64_t seed);

}  // namespace fasternam

#endif  // FASTERNAM_MODEL_HPP_
