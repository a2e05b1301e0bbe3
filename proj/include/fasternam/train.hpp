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

// Learning sanity check: full-batch gradient descent on a synthetic
// two-category image set.

#ifndef FASTERNAM_TRAIN_HPP_
#define FASTERNAM_TRAIN_HPP_

#include <cstdint>
#include <vector>

#include "fasternam/graph.hpp"
#include "fasternam/layers.hpp"

namespace fasternam {

struct TrainRecord {
  std::int64_t step = 0;
  double loss = 0.0;
};

using TrainLog = std::vector<TrainRecord>;

struct SyntheticDataset {
  Tensor images;            // (samples, c, h, w)
  std::vector<int> labels;  // 0: bright centered square, 1: dark
};

// Noise in [0, 0.2); category 0 additionally carries a centered square of
// half the image side with values in [0.8, 1.0). Labels alternate.
SyntheticDataset make_synthetic_dataset(const ShapeCHW& shape,
                                        std::int64_t samples,
                                        std::uint64_t seed);

struct LossAndGrad {
  double loss = 0.0;
  Tensor grad;  // d(mean loss)/d(logits)
};

// Mean softmax cross-entropy over logits shaped (n, classes, 1, 1).
LossAndGrad softmax_cross_entropy(const Tensor& logits,
                                  const std::vector<int>& labels);

constexpr std::int64_t kDemoSamples = 256;

// The graph must end in `gap_head classes=2`. Each record holds the loss
// measured before that step's parameter update.
TrainLog run_demo_train(const GraphSpec& graph, std::uint64_t seed,
                        std::int64_t steps, double lr);

}  // namespace fasternam

#endif  // FASTERNAM_TRAIN_HPP_
