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

#include "fasternam/gradient_suite.hpp"

#include <random>

#include "fasternam/layers.hpp"
#include "fasternam/model.hpp"

namespace fasternam {

namespace {

// Scales in [0.5, 1.5) and shifts in [-0.5, 0.5) so the gamma paths are
// exercised away from the identity.
BNParams<double> random_bn(Index channels, std::mt19937_64& rng) {
  BNParams<double> bn = BNParams<double>::identity(channels);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  std::uniform_real_distribution<double> shift(-0.5, 0.5);
  for (Index i = 0; i < channels; ++i) {
    bn.gamma[i] = scale(rng);
    bn.beta[i] = shift(rng);
  }
  return bn;
}

template <typename Unit>
GradReport check(std::vector<GradReport>& out, Unit& unit, const char* name,
                 const Shape4& shape, std::uint64_t seed, double tolerance) {
  GradCheckOptions opt;
  opt.tolerance = tolerance;
  out.push_back(gradcheck(unit, name, shape, seed, opt));
  return out.back();
}

}  // namespace

std::vector<GradReport> run_gradient_suite(std::uint64_t seed,
                                           double tolerance) {
  std::mt19937_64 rng(seed);
  std::vector<GradReport> reports;

  {
    const ConvSpec spec{2, 3, 3, 1, 1};
    ConvLayer conv(spec, init_params(spec, rng()));
    check(reports, conv, "conv2d", Shape4{1, 2, 5, 5}, rng(), tolerance);
  }
  {
    const ConvSpec spec{2, 2, 3, 2, 1};
    ConvParams<double> p = init_params(spec, rng());
    p.bias.setConstant(0.1);
    ConvLayer conv(spec, std::move(p));
    check(reports, conv, "conv2d_stride2", Shape4{2, 2, 6, 6}, rng(), tolerance);
  }
  {
    BatchNormLayer bn(random_bn(3, rng));
    check(reports, bn, "batchnorm", Shape4{2, 3, 4, 4}, rng(), tolerance);
  }
  {
    PWConvParams<double> p = init_params(PWConvSpec{3, 5}, rng());
    p.bias.setConstant(-0.2);
    PWConvLayer pw(std::move(p));
    check(reports, pw, "pwconv", Shape4{2, 3, 4, 4}, rng(), tolerance);
  }
  {
    const PConvSpec spec{4, 2, 3};
    PConvLayer pc(spec, init_params(spec, rng()));
    check(reports, pc, "pconv", Shape4{2, 4, 5, 5}, rng(), tolerance);
  }
  {
    FasterNetBlockParams<double> p = init_params(FasterNetSpec{4, 2, 3, 2}, rng());
    p.bn1 = random_bn(p.spec.hidden(), rng);
    FasterNetLayer block(std::move(p));
    check(reports, block, "fasternet_block", Shape4{2, 4, 5, 5}, rng(), tolerance);
  }
  {
    NamChannelLayer nam(NAMChannelParams<double>{random_bn(3, rng)});
    check(reports, nam, "nam_channel", Shape4{2, 3, 4, 4}, rng(), tolerance);
  }
  {
    NamSpatialLayer nam(NAMSpatialParams<double>{random_bn(9, rng), 3, 3});
    check(reports, nam, "nam_spatial", Shape4{2, 3, 3, 3}, rng(), tolerance);
  }
  {
    GraphSpec graph;
    graph.name = "composite";
    graph.input_shape = {3, 6, 6};
    graph.layers = {
        {LayerKind::kConv, {{"cin", 3}, {"cout", 4}, {"k", 3}, {"s", 1}, {"p", 1}}},
        {LayerKind::kFasterNet, {{"c", 4}, {"cp", 2}, {"e", 2}, {"k", 3}}},
        {LayerKind::kNamChannel, {{"c", 4}}},
    };
    Model model = build_model(graph, rng());
    check(reports, model, "composite_conv_fasternet_nam", Shape4{2, 3, 6, 6}, rng(),
          tolerance);
  }
  return reports;
}

}  // namespace fasternam
