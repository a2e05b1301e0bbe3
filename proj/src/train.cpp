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

#include "fasternam/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fasternam/error.hpp"
#include "fasternam/model.hpp"

namespace fasternam {

SyntheticDataset make_synthetic_dataset(const ShapeCHW& shape,
                                        std::int64_t samples,
                                        std::uint64_t seed) {
  if (samples < 1) throw ValidationError("dataset needs at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 0.2);
  std::uniform_real_distribution<double> bright(0.8, 1.0);

  SyntheticDataset ds{Tensor(Shape4{samples, shape.c, shape.h, shape.w}), {}};
  const Index side_h = std::max<Index>(1, shape.h / 2);
  const Index side_w = std::max<Index>(1, shape.w / 2);
  const Index top = (shape.h - side_h) / 2;
  const Index left = (shape.w - side_w) / 2;
  for (Index s = 0; s < samples; ++s) {
    const int label = static_cast<int>(s % 2);
    ds.labels.push_back(label);
    for (Index ch = 0; ch < shape.c; ++ch) {
      auto plane = ds.images.plane(s, ch);
      for (Index y = 0; y < shape.h; ++y) {
        for (Index x = 0; x < shape.w; ++x) plane(y, x) = noise(rng);
      }
      if (label == 0) {
        for (Index y = top; y < top + side_h; ++y) {
          for (Index x = left; x < left + side_w; ++x) plane(y, x) = bright(rng);
        }
      }
    }
  }
  return ds;
}

LossAndGrad softmax_cross_entropy(const Tensor& logits,
                                  const std::vector<int>& labels) {
  if (logits.h() != 1 || logits.w() != 1) {
    throw ValidationError("logits must be (n, classes, 1, 1), got " +
                          to_string(logits.shape()));
  }
  if (static_cast<Index>(labels.size()) != logits.n()) {
    throw ValidationError("label count does not match batch size");
  }
  LossAndGrad r{0.0, Tensor(logits.shape())};
  const double inv_n = 1.0 / static_cast<double>(logits.n());
  for (Index b = 0; b < logits.n(); ++b) {
    Vec<double> z(logits.c());
    for (Index k = 0; k < logits.c(); ++k) z[k] = logits(b, k, 0, 0);
    const double zmax = z.maxCoeff();
    const Vec<double> e = (z.array() - zmax).exp().matrix();
    const double total = e.sum();
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= logits.c()) throw ValidationError("label out of range");
    r.loss += (std::log(total) - (z[y] - zmax)) * inv_n;
    for (Index k = 0; k < logits.c(); ++k) {
      r.grad(b, k, 0, 0) = (e[k] / total - (k == y ? 1.0 : 0.0)) * inv_n;
    }
  }
  return r;
}

TrainLog run_demo_train(const GraphSpec& graph, std::uint64_t seed,
                        std::int64_t steps, double lr) {
  if (steps < 1) throw ValidationError("train-demo needs steps >= 1");
  if (!std::isfinite(lr) || lr < 0.0) {
    throw ValidationError("learning rate must be finite and non-negative");
  }
  if (graph.layers.empty() || graph.layers.back().kind != LayerKind::kGapHead ||
      graph.layers.back().at("classes") != 2) {
    throw ValidationError("train-demo graph must end with 'gap_head classes=2'");
  }

  Model model = build_model(graph, seed);
  const SyntheticDataset data =
      make_synthetic_dataset(graph.input_shape, kDemoSamples, seed ^ 0x5eedULL);
  std::vector<ParamRef> params = model.parameters();

  TrainLog log;
  for (std::int64_t step = 1; step <= steps; ++step) {
    model.zero_grad();
    const Tensor logits = model.forward(data.images, Mode::kTrain);
    LossAndGrad lg = softmax_cross_entropy(logits, data.labels);
    if (!std::isfinite(lg.loss)) {
      throw NumericalError("loss diverged at step " + std::to_string(step));
    }
    log.push_back({step, lg.loss});
    model.backward(lg.grad);
    for (ParamRef& p : params) {
      for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * p.grad[i];
    }
  }
  return log;
}

}  // namespace fasternam
