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

// Efficiency-oriented building blocks: partial convolution (PConv),
// pointwise convolution (PWConv), and the FasterNet inverted-residual block
//
//   out = x + pw2(relu(bn1(pw1(pconv(x)))))
//
// PConv convolves only the first c_p channels and copies the rest through
// untouched, so its cost is (c_p / c)^2 of a full convolution.

#ifndef FASTERNAM_BLOCKS_HPP_
#define FASTERNAM_BLOCKS_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "fasternam/error.hpp"
#include "fasternam/ops.hpp"
#include "fasternam/tensor.hpp"

namespace fasternam {

struct PConvSpec {
  Index c = 1;
  Index c_p = 1;
  Index k = 3;

  Index padding() const { return (k - 1) / 2; }
  double partial_ratio() const {
    return static_cast<double>(c_p) / static_cast<double>(c);
  }
  ConvSpec conv_spec() const { return ConvSpec{c_p, c_p, k, 1, padding()}; }

  void validate() const {
    if (c < 1 || c_p < 1 || c_p > c) {
      throw ValidationError("pconv needs 1 <= cp <= c, got c=" +
                            std::to_string(c) + " cp=" + std::to_string(c_p));
    }
    if (k < 1 || k % 2 == 0) {
      throw ValidationError("pconv kernel size must be odd, got k=" +
                            std::to_string(k));
    }
  }
};

// ---------------------------------------------------------------------------
// PConv

template <typename Scalar>
Tensor4<Scalar> pconv(const Tensor4<Scalar>& input,
                      const Tensor4<Scalar>& weights, const PConvSpec& spec,
                      OpCounter* counter = nullptr) {
  spec.validate();
  detail::require(input.c() == spec.c,
                  detail::dim_mismatch("pconv input channels", input.c(), spec.c));
  Tensor4<Scalar> out = input;
  const Tensor4<Scalar> head = slice_channels(input, 0, spec.c_p);
  assign_channels(out, 0,
                  conv2d(head, weights, Vec<Scalar>(Vec<Scalar>::Zero(spec.c_p)),
                         spec.conv_spec(), counter));
  return out;
}

template <typename Scalar>
struct PConvGrads {
  Tensor4<Scalar> input;
  Tensor4<Scalar> weights;
};

template <typename Scalar>
PConvGrads<Scalar> pconv_grad(const Tensor4<Scalar>& input,
                              const Tensor4<Scalar>& weights,
                              const PConvSpec& spec,
                              const Tensor4<Scalar>& grad_out) {
  spec.validate();
  detail::require(grad_out.shape() == input.shape(),
                  "pconv grad_out shape mismatch");
  ConvGrads<Scalar> g =
      conv2d_grad(slice_channels(input, 0, spec.c_p), weights, spec.conv_spec(),
                  slice_channels(grad_out, 0, spec.c_p));
  PConvGrads<Scalar> out{grad_out, std::move(g.kernel)};
  assign_channels(out.input, 0, g.input);
  return out;
}

// ---------------------------------------------------------------------------
// PWConv: per-pixel channel mixing, weights shaped (c_out, c_in).

template <typename Scalar>
Tensor4<Scalar> pointwise_kernel(const Mat<Scalar>& weights) {
  return Tensor4<Scalar>(Shape4{weights.rows(), weights.cols(), 1, 1},
                         weights.template reshaped<Eigen::RowMajor>());
}

template <typename Scalar>
Tensor4<Scalar> pwconv(const Tensor4<Scalar>& input, const Mat<Scalar>& weights,
                       const Vec<Scalar>& bias, OpCounter* counter = nullptr) {
  detail::require(weights.cols() == input.c(),
                  detail::dim_mismatch("pwconv input channels", input.c(),
                                       weights.cols()));
  return conv2d(input, pointwise_kernel(weights), bias,
                ConvSpec{weights.cols(), weights.rows(), 1, 1, 0}, counter);
}

template <typename Scalar>
struct PWConvGrads {
  Tensor4<Scalar> input;
  Mat<Scalar> weights;
  Vec<Scalar> bias;
};

template <typename Scalar>
PWConvGrads<Scalar> pwconv_grad(const Tensor4<Scalar>& input,
                                const Mat<Scalar>& weights,
                                const Tensor4<Scalar>& grad_out) {
  detail::require(weights.cols() == input.c(),
                  detail::dim_mismatch("pwconv input channels", input.c(),
                                       weights.cols()));
  ConvGrads<Scalar> g =
      conv2d_grad(input, pointwise_kernel(weights),
                  ConvSpec{weights.cols(), weights.rows(), 1, 1, 0}, grad_out);
  Mat<Scalar> gw = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic,
                                                  Eigen::Dynamic, Eigen::RowMajor>>(
      g.kernel.data(), weights.rows(), weights.cols());
  return {std::move(g.input), std::move(gw), std::move(g.bias)};
}

// ---------------------------------------------------------------------------
// FasterNet block

struct FasterNetSpec {
  Index c = 1;
  Index c_p = 1;
  Index k = 3;
  Index expansion = 2;

  PConvSpec pconv_spec() const { return PConvSpec{c, c_p, k}; }
  Index hidden() const { return expansion * c; }

  void validate() const {
    pconv_spec().validate();
    if (expansion < 1) {
      throw ValidationError("fasternet expansion must be >= 1, got e=" +
                            std::to_string(expansion));
    }
  }
};

template <typename Scalar>
struct FasterNetBlockParams {
  FasterNetSpec spec;
  Tensor4<Scalar> pconv;  // (c_p, c_p, k, k)
  Mat<Scalar> pw1;        // (e*c, c)
  Vec<Scalar> pw1_bias;
  BNParams<Scalar> bn1;   // e*c channels
  Mat<Scalar> pw2;        // (c, e*c)
  Vec<Scalar> pw2_bias;

  void validate() const {
    spec.validate();
    const Index hid = spec.hidden();
    detail::require(pconv.shape() == Shape4{spec.c_p, spec.c_p, spec.k, spec.k},
                    "fasternet pconv weights shaped " + to_string(pconv.shape()));
    detail::require(pw1.rows() == hid && pw1.cols() == spec.c &&
                        pw1_bias.size() == hid,
                    "fasternet pw1 must map c -> e*c");
    detail::require(pw2.rows() == spec.c && pw2.cols() == hid &&
                        pw2_bias.size() == spec.c,
                    "fasternet pw2 must map e*c -> c");
    bn1.validate(hid);
  }
};

template <typename Scalar>
struct FasterNetCache {
  Tensor4<Scalar> pconv_out;
  Tensor4<Scalar> pw1_out;
  BNForward<Scalar> bn;
  Tensor4<Scalar> relu_out;
};

template <typename Scalar>
struct FasterNetForward {
  Tensor4<Scalar> output;
  FasterNetCache<Scalar> cache;
};

template <typename Scalar>
FasterNetForward<Scalar> fasternet_block_forward(
    const Tensor4<Scalar>& input, const FasterNetBlockParams<Scalar>& params,
    Mode mode, OpCounter* counter = nullptr) {
  params.validate();
  detail::require(input.c() == params.spec.c,
                  detail::dim_mismatch("fasternet input channels", input.c(),
                                       params.spec.c));
  FasterNetForward<Scalar> f;
  FasterNetCache<Scalar>& k = f.cache;
  k.pconv_out = pconv(input, params.pconv, params.spec.pconv_spec(), counter);
  k.pw1_out = pwconv(k.pconv_out, params.pw1, params.pw1_bias, counter);
  k.bn = batchnorm(k.pw1_out, params.bn1, mode, counter);
  k.relu_out = relu(k.bn.output, counter);
  f.output = pwconv(k.relu_out, params.pw2, params.pw2_bias, counter);
  f.output.array() += input.array();
  charge(counter, input.size());
  return f;
}

template <typename Scalar>
Tensor4<Scalar> fasternet_block(const Tensor4<Scalar>& input,
                                const FasterNetBlockParams<Scalar>& params,
                                Mode mode, OpCounter* counter = nullptr) {
  return fasternet_block_forward(input, params, mode, counter).output;
}

template <typename Scalar>
struct FasterNetGrads {
  Tensor4<Scalar> input;
  Tensor4<Scalar> pconv;
  Mat<Scalar> pw1;
  Vec<Scalar> pw1_bias;
  Vec<Scalar> bn1_gamma;
  Vec<Scalar> bn1_beta;
  Mat<Scalar> pw2;
  Vec<Scalar> pw2_bias;
};

template <typename Scalar>
FasterNetGrads<Scalar> fasternet_block_grad(
    const Tensor4<Scalar>& input, const FasterNetBlockParams<Scalar>& params,
    const FasterNetCache<Scalar>& cache, const Tensor4<Scalar>& grad_out,
    Mode mode = Mode::kTrain) {
  detail::require(grad_out.shape() == input.shape(),
                  "fasternet grad_out shape mismatch");
  FasterNetGrads<Scalar> g;
  PWConvGrads<Scalar> g_pw2 = pwconv_grad(cache.relu_out, params.pw2, grad_out);
  const Tensor4<Scalar> g_bn_out = relu_grad(cache.bn.output, g_pw2.input);
  BNGrads<Scalar> g_bn = batchnorm_grad(cache.pw1_out, params.bn1, cache.bn.mean,
                                        cache.bn.var, g_bn_out, mode);
  PWConvGrads<Scalar> g_pw1 =
      pwconv_grad(cache.pconv_out, params.pw1, g_bn.input);
  PConvGrads<Scalar> g_pc =
      pconv_grad(input, params.pconv, params.spec.pconv_spec(), g_pw1.input);

  g.input = std::move(g_pc.input);
  g.input.array() += grad_out.array();  // skip connection
  g.pconv = std::move(g_pc.weights);
  g.pw1 = std::move(g_pw1.weights);
  g.pw1_bias = std::move(g_pw1.bias);
  g.bn1_gamma = std::move(g_bn.gamma);
  g.bn1_beta = std::move(g_bn.beta);
  g.pw2 = std::move(g_pw2.weights);
  g.pw2_bias = std::move(g_pw2.bias);
  return g;
}

// ---------------------------------------------------------------------------
// Initialization: weights ~ U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)) with
// fan_in = c_in * k^2; biases 0; batch norm gamma 1, beta 0, running (0, 1).

inline double init_bound(Index fan_in) {
  return std::sqrt(6.0 / static_cast<double>(fan_in));
}

template <typename Scalar>
Tensor4<Scalar> init_kernel(Index c_out, Index c_in, Index k,
                            std::mt19937_64& rng) {
  const Scalar bound = Scalar(init_bound(c_in * k * k));
  return random_uniform<Scalar>(Shape4{c_out, c_in, k, k}, rng, -bound, bound);
}

template <typename Scalar>
Mat<Scalar> init_pointwise(Index c_out, Index c_in, std::mt19937_64& rng) {
  const Tensor4<Scalar> k = init_kernel<Scalar>(c_out, c_in, 1, rng);
  return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(k.data(), c_out, c_in);
}

template <typename Scalar>
struct ConvParams {
  Tensor4<Scalar> kernel;
  Vec<Scalar> bias;
};

template <typename Scalar>
struct PWConvParams {
  Mat<Scalar> weights;
  Vec<Scalar> bias;
};

struct PWConvSpec {
  Index c_in = 1;
  Index c_out = 1;
};

template <typename Scalar = double>
ConvParams<Scalar> init_params(const ConvSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  return {init_kernel<Scalar>(spec.c_out, spec.c_in, spec.k, rng),
          Vec<Scalar>::Zero(spec.c_out)};
}

template <typename Scalar = double>
PWConvParams<Scalar> init_params(const PWConvSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return {init_pointwise<Scalar>(spec.c_out, spec.c_in, rng),
          Vec<Scalar>::Zero(spec.c_out)};
}

template <typename Scalar = double>
Tensor4<Scalar> init_params(const PConvSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  return init_kernel<Scalar>(spec.c_p, spec.c_p, spec.k, rng);
}

template <typename Scalar = double>
FasterNetBlockParams<Scalar> init_params(const FasterNetSpec& spec,
                                         std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  FasterNetBlockParams<Scalar> p;
  p.spec = spec;
  p.pconv = init_kernel<Scalar>(spec.c_p, spec.c_p, spec.k, rng);
  p.pw1 = init_pointwise<Scalar>(spec.hidden(), spec.c, rng);
  p.pw1_bias = Vec<Scalar>::Zero(spec.hidden());
  p.bn1 = BNParams<Scalar>::identity(spec.hidden());
  p.pw2 = init_pointwise<Scalar>(spec.c, spec.hidden(), rng);
  p.pw2_bias = Vec<Scalar>::Zero(spec.c);
  return p;
}

}  // namespace fasternam

#endif  // FASTERNAM_BLOCKS_HPP_
