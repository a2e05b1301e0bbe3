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

#include <doctest.h>

#include <cmath>

#include "fasternam/blocks.hpp"
#include "fasternam/error.hpp"
#include "fasternam/layers.hpp"
#include "test_util.hpp"

namespace fasternam {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;
using testing::Rng;
using testing::uniform_int;

using T = Tensor4<double>;

TEST_CASE("pconv leaves the trailing channels untouched") {
  Rng rng(1);
  const PConvSpec spec{4, 2, 3};
  const T x = random_tensor({2, 4, 6, 6}, rng);
  const T y = pconv(x, init_params(spec, 5), spec);
  CHECK(y.shape() == x.shape());
  CHECK(slice_channels(y, 2, 2) == slice_channels(x, 2, 2));
  CHECK_FALSE(slice_channels(y, 0, 2) == slice_channels(x, 0, 2));
}

TEST_CASE("property: pconv pass-through is bit-identical") {
  Rng rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const Index c = uniform_int(rng, 1, 8);
    const PConvSpec spec{c, uniform_int(rng, 1, c), 2 * uniform_int(rng, 0, 2) + 1};
    const T x = random_tensor({uniform_int(rng, 1, 2), c, uniform_int(rng, 3, 7),
                               uniform_int(rng, 3, 7)},
                              rng, -5, 5);
    const T y = pconv(x, random_tensor({spec.c_p, spec.c_p, spec.k, spec.k}, rng), spec);
    if (spec.c_p < c) {
      CHECK(slice_channels(y, spec.c_p, c - spec.c_p) ==
            slice_channels(x, spec.c_p, c - spec.c_p));
    }
  }
}

TEST_CASE("pconv with cp == c equals a same-padded conv2d") {
  Rng rng(3);
  const PConvSpec spec{3, 3, 3};
  const T w = random_tensor({3, 3, 3, 3}, rng);
  const T x = random_tensor({2, 3, 5, 5}, rng);
  const T full = conv2d(x, w, Vec<double>::Zero(3).eval(), ConvSpec{3, 3, 3, 1, 1});
  CHECK(max_abs_diff(pconv(x, w, spec), full) < 1e-6);
}

TEST_CASE("pconv validates its spec") {
  const T x(Shape4{1, 4, 3, 3});
  CHECK_THROWS_AS(PConvSpec({4, 5, 3}).validate(), ValidationError);
  CHECK_THROWS_AS(PConvSpec({4, 0, 3}).validate(), ValidationError);
  CHECK_THROWS_AS(PConvSpec({4, 2, 2}).validate(), ValidationError);
  CHECK_THROWS_AS(pconv(x, T(Shape4{2, 2, 3, 3}), PConvSpec{3, 2, 3}),
                  ValidationError);
}

TEST_CASE("pconv partial ratio and measured cost") {
  const PConvSpec spec{64, 16, 3};
  CHECK(spec.partial_ratio() == 0.25);
  Rng rng(4);
  const T x = random_tensor({1, 64, 56, 56}, rng);
  OpCounter partial;
  pconv(x, init_params(spec, 1), spec, &partial);
  CHECK(partial.flops == 7225344);
  OpCounter full;
  conv2d(x, init_params(ConvSpec{64, 64, 3, 1, 1}, 1).kernel,
         Vec<double>::Zero(64).eval(), ConvSpec{64, 64, 3, 1, 1}, &full);
  CHECK(full.flops == 115605504);
  CHECK(partial.flops * 16 == full.flops);
}

TEST_CASE("pwconv identity, channel sum, and constant bias") {
  Rng rng(5);
  const T x = random_tensor({2, 3, 4, 4}, rng);
  CHECK(pwconv(x, Mat<double>::Identity(3, 3).eval(), Vec<double>::Zero(3).eval()) == x);

  const T two = random_tensor({1, 2, 3, 3}, rng);
  Mat<double> sum_w(1, 2);
  sum_w << 1.0, 1.0;
  const T s = pwconv(two, sum_w, Vec<double>::Zero(1).eval());
  CHECK(s.shape() == Shape4{1, 1, 3, 3});
  CHECK(max_abs_diff(s, T(s.shape(), two.flat_plane(0, 0) +
                                         two.flat_plane(0, 1))) < 1e-15);

  Vec<double> b(2);
  b << 1.5, -0.5;
  const T c = pwconv(x, Mat<double>::Zero(2, 3).eval(), b);
  CHECK((c.plane(1, 0) == 1.5).all());
  CHECK((c.plane(0, 1) == -0.5).all());
}

TEST_CASE("pwconv_grad matches the k=1 convolution gradient") {
  Rng rng(6);
  const T x = random_tensor({2, 3, 4, 4}, rng);
  const Mat<double> w = Mat<double>::Random(5, 3);
  const T go = random_tensor({2, 5, 4, 4}, rng);
  const PWConvGrads<double> g = pwconv_grad(x, w, go);
  const ConvGrads<double> c = conv2d_grad(x, pointwise_kernel(w), ConvSpec{3, 5, 1, 1, 0}, go);
  CHECK(g.input == c.input);
  CHECK(g.bias == c.bias);
  for (Index o = 0; o < 5; ++o) {
    for (Index i = 0; i < 3; ++i) CHECK(g.weights(o, i) == c.kernel(o, i, 0, 0));
  }
}

TEST_CASE("fasternet block preserves shape") {
  Rng rng(7);
  const FasterNetBlockParams<double> p = init_params(FasterNetSpec{8, 2, 3, 2}, 3);
  const T x = random_tensor({1, 8, 16, 16}, rng);
  CHECK(fasternet_block(x, p, Mode::kTrain).shape() == x.shape());
  CHECK(fasternet_block(x, p, Mode::kEval).shape() == x.shape());
}

TEST_CASE("property: fasternet block is shape preserving") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Index c = uniform_int(rng, 1, 6);
    const FasterNetSpec spec{c, uniform_int(rng, 1, c), 2 * uniform_int(rng, 0, 1) + 1,
                             uniform_int(rng, 1, 3)};
    const T x = random_tensor({uniform_int(rng, 1, 2), c, uniform_int(rng, 2, 6),
                               uniform_int(rng, 2, 6)},
                              rng);
    CHECK(fasternet_block(x, init_params(spec, trial), Mode::kTrain).shape() ==
          x.shape());
  }
}

TEST_CASE("fasternet block with a zero second pointwise is the identity") {
  Rng rng(9);
  FasterNetBlockParams<double> p = init_params(FasterNetSpec{6, 3, 3, 2}, 4);
  p.pw2.setZero();
  p.pw2_bias.setZero();
  const T x = random_tensor({2, 6, 5, 5}, rng);
  CHECK(fasternet_block(x, p, Mode::kTrain) == x);
}

TEST_CASE("fasternet block rejects mismatched parameters") {
  FasterNetBlockParams<double> p = init_params(FasterNetSpec{4, 2, 3, 2}, 1);
  CHECK_THROWS_AS(fasternet_block(T(Shape4{1, 5, 3, 3}), p, Mode::kTrain),
                  ValidationError);
  p.pw1_bias = Vec<double>::Zero(3);
  CHECK_THROWS_AS(fasternet_block(T(Shape4{1, 4, 3, 3}), p, Mode::kTrain),
                  ValidationError);
  CHECK_THROWS_AS(FasterNetSpec({4, 2, 3, 0}).validate(), ValidationError);
}

TEST_CASE("small fasternet block passes gradcheck") {
  FasterNetLayer layer(init_params(FasterNetSpec{3, 2, 3, 2}, 11));
  const GradReport r = gradcheck(layer, "fasternet", Shape4{2, 3, 4, 4}, 12);
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("init_params is deterministic per seed") {
  const FasterNetSpec spec{8, 4, 3, 2};
  const FasterNetBlockParams<double> a = init_params(spec, 42);
  const FasterNetBlockParams<double> b = init_params(spec, 42);
  const FasterNetBlockParams<double> c = init_params(spec, 43);
  CHECK(a.pconv == b.pconv);
  CHECK(a.pw1 == b.pw1);
  CHECK(a.pw2 == b.pw2);
  CHECK_FALSE(a.pw1 == c.pw1);
  CHECK(a.pw1_bias.isZero());
  CHECK(a.pw2_bias.isZero());
  CHECK((a.bn1.gamma.array() == 1.0).all());
  CHECK(a.bn1.beta.isZero());
  CHECK(a.bn1.running_mean.isZero());
  CHECK((a.bn1.running_var.array() == 1.0).all());

  const ConvSpec conv{3, 4, 3, 1, 1};
  CHECK(init_params(conv, 5).kernel == init_params(conv, 5).kernel);
}

TEST_CASE("init weights follow the uniform fan-in bound") {
  // 10,000 draws with fan_in = 25 * 9.
  const ConvSpec spec{25, 400 / 9 + 1, 3, 1, 1};
  const T w = init_params(spec, 2024).kernel;
  REQUIRE(w.size() >= 10000);
  const auto draws = w.array().head(10000);
  const double bound = std::sqrt(6.0 / (25.0 * 9.0));
  CHECK(draws.abs().maxCoeff() <= bound);
  const double mean = draws.mean();
  const double sd = std::sqrt((draws - mean).square().mean());
  const double expect = bound / std::sqrt(3.0);
  CHECK(std::abs(sd - expect) / expect < 0.05);
}

}  // namespace
}  // namespace fasternam
