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

#ifndef FASTERNAM_GRADIENT_SUITE_HPP_
#define FASTERNAM_GRADIENT_SUITE_HPP_

#include <cstdint>
#include <vector>

#include "fasternam/gradcheck.hpp"

namespace fasternam {

// Gradient checks for every differentiable unit: conv2d (stride 1 and 2),
// batchnorm, pwconv, pconv, fasternet_block, nam_channel, nam_spatial, and a
// conv -> fasternet -> nam_channel composite.
std::vector<GradReport> run_gradient_suite(std::uint64_t seed,
                                           double tolerance = 1e-4);

}  // namespace fasternam

#endif  // FASTERNAM_GRADIENT_SUITE_HPP_
