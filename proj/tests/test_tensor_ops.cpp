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

#include "fasternam/error.hpp"
#include "fasternam/ops.hpp"
#include "test_util.hpp"

namespace fasternam {
namespace {

using testing::central_difference;
using testing::max_abs_diff;
using testing::random_tensor;
using testing::rel_error;
using testing::Rng;
using testing::uniform_int;
using testing::weighted_sum;

using T = Tensor4<double>;

TEST_CASE("tensor construction validates shape and value count") {
  CHECK_THROWS_AS(T(Shape4{1, 0, 2, 2}), ValidationError);
  CHECK_THROWS_AS(T(Shape4{1, 1, 1, 2}, {1.0}), ValidationError);
  T t(Shape4{1, 2, 2, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  CHECK(t(0, 1, 0, 2) == 8);
  CHECK(t.plane(0, 1)(1, 0) == 9);
  CHECK(t.flat_plane(0, 0).sum() == 15);
}

TEST_CASE("slice and assign channels round trip") {
  Rng rng(3);
  const T x = random_tensor({2, 5, 3, 4}, rng);
  const T mid = slice_channels(x, 1, 3);
  CHECK(mid.shape() == Shape4{2, 3, 3, 4});
  CHECK(mid(1, 0, 2, 3) == x(1, 1, 2, 3));
  T y(x.shape());
  assign_channels(y, 1, mid);
  CHECK(slice_channels(y, 1, 3) == mid);
  CHECK(y.plane(0, 0).isZero());
  CHECK_THROWS_AS(slice_channels(x, 3, 3), ValidationError);
}

TEST_CASE("conv2d with identity 1x1 kernel") {
  const T x(Shape4{1, 1, 1, 1}, {5.0});
  const T k(Shape4{1, 1, 1, 1}, {1.0});
  const T y = conv2d(x, k, Vec<double>::Zero(1).eval(), ConvSpec{1, 1, 1, 1, 0});
  CHECK(y.shape() == Shape4{1, 1, 1, 1});
  CHECK(y(0, 0, 0, 0) == 5.0);
}

TEST_CASE("conv2d of ones over ones sums nine products") {
  const T x(Shape4{1, 1, 3, 3}, 1.0);
  const T k(Shape4{1, 1, 3, 3}, 1.0);
  const T y = conv2d(x, k, Vec<double>::Zero(1).eval(), ConvSpec{1, 1, 3, 1, 0});
  CHECK(y.shape() == Shape4{1, 1, 1, 1});
  CHECK(y(0, 0, 0, 0) == 9.0);
}

TEST_CASE("conv2d hand-computed padded corner") {
  // 2x2 input [[1,2],[3,4]], 3x3 kernel of ones, padding 1: every output
  // window covers the whole input.
  const T x(Shape4{1, 1, 2, 2}, {1, 2, 3, 4});
  const T k(Shape4{1, 1, 3, 3}, 1.0);
  Vec<double> bias(1);
  bias << 0.5;
  const T y = conv2d(x, k, bias, ConvSpec{1, 1, 3, 1, 1});
  CHECK(y.shape() == Shape4{1, 1, 2, 2});
  for (Index i = 0; i < 4; ++i) CHECK(y.array()[i] == doctest::Approx(10.5));
}

TEST_CASE("conv2d with zero kernel and bias is zero") {
  Rng rng(1);
  const ConvSpec spec{3, 4, 3, 2, 1};
  const T y = conv2d(random_tensor({2, 3, 7, 6}, rng), T(Shape4{4, 3, 3, 3}),
                     Vec<double>::Zero(4).eval(), spec);
  CHECK(y.array().isZero());
}

TEST_CASE("conv2d rejects inconsistent arguments") {
  const T x(Shape4{1, 2, 4, 4});
  const Vec<double> b = Vec<double>::Zero(3);
  CHECK_THROWS_AS(conv2d(x, T(Shape4{3, 1, 3, 3}), b, ConvSpec{2, 3, 3, 1, 1}),
                  ValidationError);
  CHECK_THROWS_AS(conv2d(x, T(Shape4{3, 2, 3, 3}), b, ConvSpec{2, 3, 3, 0, 1}),
                  ValidationError);
  CHECK_THROWS_AS(conv2d(x, T(Shape4{3, 2, 5, 5}), b, ConvSpec{2, 3, 5, 1, 0}),
                  ValidationError);
  CHECK_THROWS_AS(conv2d(x, T(Shape4{3, 2, 3, 3}), Vec<double>::Zero(2).eval(),
                         ConvSpec{2, 3, 3, 1, 1}),
                  ValidationError);
}

TEST_CASE("property: conv2d output shape follows the floor rule") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Index k = uniform_int(rng, 1, 5);
    const Index s = uniform_int(rng, 1, 3);
    const Index p = uniform_int(rng, 0, 2);
    const Index h = uniform_int(rng, std::max<Index>(1, k - 2 * p), 12);
    const Index w = uniform_int(rng, std::max<Index>(1, k - 2 * p), 12);
    const ConvSpec spec{1, 2, k, s, p};
    const T y = conv2d(T(Shape4{1, 1, h, w}, 1.0), T(Shape4{2, 1, k, k}, 1.0),
                       Vec<double>::Zero(2).eval(), spec);
    CHECK(y.h() == (h + 2 * p - k) / s + 1);
    CHECK(y.w() == (w + 2 * p - k) / s + 1);
  }
}

TEST_CASE("property: conv2d is linear in its input") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const ConvSpec spec{uniform_int(rng, 1, 4), uniform_int(rng, 1, 4),
                        2 * uniform_int(rng, 0, 2) + 1, uniform_int(rng, 1, 2),
                        uniform_int(rng, 0, 2)};
    const Shape4 s{uniform_int(rng, 1, 2), spec.c_in, uniform_int(rng, 5, 9),
                   uniform_int(rng, 5, 9)};
    const T kernel = random_tensor({spec.c_out, spec.c_in, spec.k, spec.k}, rng);
    const Vec<double> zero = Vec<double>::Zero(spec.c_out);
    const T x = random_tensor(s, rng);
    const T y = random_tensor(s, rng);
    const double a = testing::uniform_real(rng, -3, 3);
    const double b = testing::uniform_real(rng, -3, 3);
    const T lhs = conv2d(T(s, a * x.array() + b * y.array()), kernel, zero, spec);
    const T rx = conv2d(x, kernel, zero, spec);
    const T ry = conv2d(y, kernel, zero, spec);
    const T rhs(lhs.shape(), a * rx.array() + b * ry.array());
    const double scale = std::max(1.0, rhs.array().abs().maxCoeff());
    CHECK(max_abs_diff(lhs, rhs) / scale < 1e-6);
  }
}

TEST_CASE("conv2d charges one multiply-accumulate per kernel tap and output") {
  Rng rng(2);
  const ConvSpec spec{3, 16, 3, 1, 1};
  OpCounter counter;
  conv2d(random_tensor({1, 3, 32, 32}, rng), random_tensor({16, 3, 3, 3}, rng),
         Vec<double>::Zero(16).eval(), spec, &counter);
  CHECK(counter.flops == 442368);
}

TEST_CASE("conv2d_grad zero cotangent gives zero gradients") {
  Rng rng(4);
  const ConvSpec spec{2, 3, 3, 1, 1};
  const T x = random_tensor({1, 2, 4, 4}, rng);
  const T k = random_tensor({3, 2, 3, 3}, rng);
  const ConvGrads<double> g = conv2d_grad(x, k, spec, T(Shape4{1, 3, 4, 4}));
  CHECK(g.input.array().isZero());
  CHECK(g.kernel.array().isZero());
  CHECK(g.bias.isZero());
}

TEST_CASE("conv2d_grad bias gradient is the per-channel cotangent sum") {
  Rng rng(5);
  const ConvSpec spec{2, 3, 3, 2, 1};
  const T x = random_tensor({2, 2, 6, 5}, rng);
  const T k = random_tensor({3, 2, 3, 3}, rng);
  const T go = random_tensor({2, 3, 3, 3}, rng);
  const ConvGrads<double> g = conv2d_grad(x, k, spec, go);
  for (Index o = 0; o < 3; ++o) {
    const double expect = go.plane(0, o).sum() + go.plane(1, o).sum();
    CHECK(g.bias[o] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("conv2d_grad matches central differences") {
  Rng rng(6);
  const ConvSpec spec{2, 3, 3, 1, 0};
  T x = random_tensor({1, 2, 4, 4}, rng);
  T k = random_tensor({3, 2, 3, 3}, rng);
  Vec<double> b = Vec<double>::Random(3);
  const T r = random_tensor({1, 3, 2, 2}, rng);
  auto loss = [&] { return weighted_sum(conv2d(x, k, b, spec), r); };
  const ConvGrads<double> g = conv2d_grad(x, k, spec, r);
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    worst = std::max(worst, rel_error(g.input.array()[i],
                                      central_difference(loss, x.array()[i])));
  }
  for (Index i = 0; i < k.size(); ++i) {
    worst = std::max(worst, rel_error(g.kernel.array()[i],
                                      central_difference(loss, k.array()[i])));
  }
  for (Index i = 0; i < 3; ++i) {
    worst = std::max(worst, rel_error(g.bias[i], central_difference(loss, b[i])));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("batchnorm constant channel normalizes to zero") {
  const T x(Shape4{2, 1, 2, 2}, 3.5);
  const BNForward<double> f =
      batchnorm(x, BNParams<double>::identity(1), Mode::kTrain);
  CHECK(f.output.array().isZero());
  CHECK(f.mean[0] == 3.5);
  CHECK(f.var[0] == 0.0);
}

TEST_CASE("batchnorm with zero scale outputs the shift") {
  Rng rng(7);
  BNParams<double> p = BNParams<double>::identity(3);
  p.gamma.setZero();
  p.beta << 0.5, -1.0, 2.0;
  const T y = batchnorm(random_tensor({2, 3, 3, 3}, rng), p, Mode::kTrain).output;
  for (Index c = 0; c < 3; ++c) {
    CHECK((y.plane(0, c) == p.beta[c]).all());
    CHECK((y.plane(1, c) == p.beta[c]).all());
  }
}

TEST_CASE("batchnorm eval mode uses running statistics") {
  // values {1,3}, mean 2, variance 1, eps 0, gamma 2, beta 1
  const T x(Shape4{1, 1, 1, 2}, {1.0, 3.0});
  BNParams<double> p = BNParams<double>::identity(1);
  p.running_mean << 2.0;
  p.running_var << 1.0;
  p.gamma << 2.0;
  p.beta << 1.0;
  p.eps = 0.0;
  const T y = batchnorm(x, p, Mode::kEval).output;
  CHECK(y(0, 0, 0, 0) == doctest::Approx(-1.0));
  CHECK(y(0, 0, 0, 1) == doctest::Approx(3.0));
}

TEST_CASE("batchnorm rejects mismatched or negative parameters") {
  const T x(Shape4{1, 2, 2, 2});
  CHECK_THROWS_AS(batchnorm(x, BNParams<double>::identity(3), Mode::kTrain),
                  ValidationError);
  BNParams<double> p = BNParams<double>::identity(2);
  p.eps = -1.0;
  CHECK_THROWS_AS(batchnorm(x, p, Mode::kTrain), ValidationError);
}

TEST_CASE("property: training batchnorm output moments") {
  Rng rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    const Index c = uniform_int(rng, 1, 5);
    const Shape4 s{uniform_int(rng, 1, 3), c, uniform_int(rng, 2, 6),
                   uniform_int(rng, 2, 6)};
    BNParams<double> p = BNParams<double>::identity(c);
    for (Index i = 0; i < c; ++i) {
      p.gamma[i] = testing::uniform_real(rng, -2, 2);
      p.beta[i] = testing::uniform_real(rng, -2, 2);
    }
    const T x = random_tensor(s, rng, -3, 5);
    const BNForward<double> f = batchnorm(x, p, Mode::kTrain);
    const auto [mean, var] = channel_moments(f.output);
    for (Index i = 0; i < c; ++i) {
      const double sigma2 = f.var[i];
      const double expect_var =
          p.gamma[i] * p.gamma[i] * sigma2 / (sigma2 + p.eps);
      CHECK(std::abs(mean[i] - p.beta[i]) < 1e-6);
      CHECK(std::abs(var[i] - expect_var) < 1e-5);
    }
  }
}

TEST_CASE("batchnorm_grad zero cotangent and shift gradient") {
  Rng rng(9);
  const T x = random_tensor({2, 3, 4, 4}, rng);
  const BNParams<double> p = BNParams<double>::identity(3);
  const BNForward<double> f = batchnorm(x, p, Mode::kTrain);
  const BNGrads<double> zero =
      batchnorm_grad(x, p, f.mean, f.var, T(x.shape()), Mode::kTrain);
  CHECK(zero.input.array().isZero());
  CHECK(zero.gamma.isZero());
  CHECK(zero.beta.isZero());

  const T go = random_tensor(x.shape(), rng);
  const BNGrads<double> g = batchnorm_grad(x, p, f.mean, f.var, go, Mode::kTrain);
  for (Index c = 0; c < 3; ++c) {
    CHECK(g.beta[c] ==
          doctest::Approx(go.plane(0, c).sum() + go.plane(1, c).sum()).epsilon(1e-12));
  }
}

TEST_CASE("batchnorm_grad matches central differences in both modes") {
  Rng rng(10);
  T x = random_tensor({2, 3, 4, 4}, rng);
  BNParams<double> p = BNParams<double>::identity(3);
  p.gamma << 0.7, -1.3, 1.1;
  p.beta << 0.2, 0.0, -0.4;
  p.running_mean << 0.1, -0.2, 0.3;
  p.running_var << 0.5, 1.5, 0.9;
  const T r = random_tensor(x.shape(), rng);
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    auto loss = [&] { return weighted_sum(batchnorm(x, p, mode).output, r); };
    const BNForward<double> f = batchnorm(x, p, mode);
    const BNGrads<double> g = batchnorm_grad(x, p, f.mean, f.var, r, mode);
    double worst = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      worst = std::max(worst, rel_error(g.input.array()[i],
                                        central_difference(loss, x.array()[i])));
    }
    for (Index i = 0; i < 3; ++i) {
      worst = std::max(worst, rel_error(g.gamma[i], central_difference(loss, p.gamma[i])));
      worst = std::max(worst, rel_error(g.beta[i], central_difference(loss, p.beta[i])));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("running statistics follow the moving average") {
  BNParams<double> p = BNParams<double>::identity(2);
  Vec<double> mean(2), var(2);
  mean << 1.0, -2.0;
  var << 3.0, 0.5;
  update_running_stats(p, mean, var, 0.1);
  CHECK(p.running_mean[0] == doctest::Approx(0.1));
  CHECK(p.running_mean[1] == doctest::Approx(-0.2));
  CHECK(p.running_var[0] == doctest::Approx(0.9 + 0.3));
  CHECK(p.running_var[1] == doctest::Approx(0.9 + 0.05));
}

TEST_CASE("relu forward and gradient") {
  const T x(Shape4{1, 1, 1, 3}, {-1.0, 0.0, 2.0});
  const T y = relu(x);
  CHECK(y == T(Shape4{1, 1, 1, 3}, {0.0, 0.0, 2.0}));
  const T g = relu_grad(x, T(Shape4{1, 1, 1, 3}, {5.0, 6.0, 7.0}));
  CHECK(g == T(Shape4{1, 1, 1, 3}, {0.0, 0.0, 7.0}));

  Rng rng(13);
  const T pos = random_tensor({2, 2, 3, 3}, rng, 0.0, 4.0);
  CHECK(relu(pos) == pos);
}

}  // namespace
}  // namespace fasternam
