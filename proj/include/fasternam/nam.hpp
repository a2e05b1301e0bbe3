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

// Normalization-based attention. The batch-norm scale of each unit (gamma
// per channel, lambda per spatial position) is read as that unit's
// importance:
//
//   y    = BN(x)
//   w_i  = |gamma_i| / sum_j |gamma_j|
//   out  = x * sigmoid(w * y)
//
// The spatial variant runs the same pipeline with every (row, col) position
// acting as a normalization unit whose statistics span batch and channels.

#ifndef FASTERNAM_NAM_HPP_
#define FASTERNAM_NAM_HPP_

#include <cmath>
#include <string>

#include "fasternam/error.hpp"
#include "fasternam/ops.hpp"
#include "fasternam/tensor.hpp"

namespace fasternam {

template <typename Scalar>
Vec<Scalar> nam_weights(const Vec<Scalar>& scales) {
  if (scales.size() == 0) {
    throw ValidationError("nam_weights needs a nonempty scale sequence");
  }
  const Scalar total = scales.cwiseAbs().sum();
  if (!(total > Scalar(0))) {
    throw DegenerateInputError("nam_weights: all scaling factors are zero");
  }
  return scales.cwiseAbs() / total;
}

template <typename Scalar>
struct NAMChannelParams {
  BNParams<Scalar> bn;

  static NAMChannelParams identity(Index channels) {
    return {BNParams<Scalar>::identity(channels)};
  }
};

template <typename Scalar>
struct NAMSpatialParams {
  BNParams<Scalar> bn_spatial;  // one entry per (row, col), row-major
  Index h = 1;
  Index w = 1;

  static NAMSpatialParams identity(Index h, Index w) {
    return {BNParams<Scalar>::identity(h * w), h, w};
  }
};

template <typename Scalar>
struct NAMCache {
  BNForward<Scalar> bn;
  Vec<Scalar> weights;
  Tensor4<Scalar> gate;
};

template <typename Scalar>
struct NAMForward {
  Tensor4<Scalar> output;
  NAMCache<Scalar> cache;
};

template <typename Scalar>
struct NAMGrads {
  Tensor4<Scalar> input;
  Vec<Scalar> gamma;
  Vec<Scalar> beta;
};

namespace detail {

template <typename Scalar>
NAMForward<Scalar> nam_gate_forward(const Tensor4<Scalar>& x,
                                    const BNParams<Scalar>& bn, Mode mode,
                                    OpCounter* counter) {
  NAMForward<Scalar> f;
  f.cache.bn = batchnorm(x, bn, mode, counter);
  f.cache.weights = nam_weights(bn.gamma);
  f.cache.gate = Tensor4<Scalar>(x.shape());
  f.output = Tensor4<Scalar>(x.shape());
  for (Index b = 0; b < x.n(); ++b) {
    for (Index ch = 0; ch < x.c(); ++ch) {
      auto gate = f.cache.gate.flat_plane(b, ch);
      gate = sigmoid(f.cache.weights[ch] * f.cache.bn.output.flat_plane(b, ch));
      f.output.flat_plane(b, ch) = x.flat_plane(b, ch) * gate;
    }
  }
  // weight multiply 1 + sigmoid 4 + gating multiply 1, on top of BN's 2.
  charge(counter, 6 * x.size());
  return f;
}

template <typename Scalar>
NAMGrads<Scalar> nam_gate_grad(const Tensor4<Scalar>& x,
                               const BNParams<Scalar>& bn,
                               const NAMCache<Scalar>& cache,
                               const Tensor4<Scalar>& grad_out, Mode mode) {
  require(grad_out.shape() == x.shape(), "nam grad_out shape mismatch");
  const Vec<Scalar>& w = cache.weights;
  Tensor4<Scalar> grad_y(x.shape());
  Tensor4<Scalar> grad_x(x.shape());
  Vec<Scalar> grad_w = Vec<Scalar>::Zero(x.c());
  for (Index b = 0; b < x.n(); ++b) {
    for (Index ch = 0; ch < x.c(); ++ch) {
      const auto gate = cache.gate.flat_plane(b, ch);
      const auto dout = grad_out.flat_plane(b, ch);
      grad_x.flat_plane(b, ch) = dout * gate;
      const auto dz =
          (dout * x.flat_plane(b, ch) * gate * (Scalar(1) - gate)).eval();
      grad_w[ch] += (dz * cache.bn.output.flat_plane(b, ch)).sum();
      grad_y.flat_plane(b, ch) = w[ch] * dz;
    }
  }
  BNGrads<Scalar> g_bn =
      batchnorm_grad(x, bn, cache.bn.mean, cache.bn.var, grad_y, mode);
  grad_x.array() += g_bn.input.array();

  // Chain through w_i = |g_i| / S:  dL/dg_k = sign(g_k) / S * (dw_k - <dw, w>).
  const Scalar total = bn.gamma.cwiseAbs().sum();
  const Scalar dot = grad_w.dot(w);
  const Vec<Scalar> sign = bn.gamma.array().sign().matrix();
  Vec<Scalar> grad_gamma = g_bn.gamma;
  grad_gamma.array() +=
      sign.array() * (grad_w.array() - dot) / total;
  return {std::move(grad_x), std::move(grad_gamma), std::move(g_bn.beta)};
}

// (n, c, h, w) -> (n, h*w, c, 1): each spatial position becomes a
// "channel" whose statistics run over batch and original channels.
template <typename Scalar>
Tensor4<Scalar> positions_as_channels(const Tensor4<Scalar>& t) {
  Tensor4<Scalar> out(Shape4{t.n(), t.h() * t.w(), t.c(), 1});
  for (Index b = 0; b < t.n(); ++b) {
    for (Index ch = 0; ch < t.c(); ++ch) {
      const auto src = t.flat_plane(b, ch);
      for (Index p = 0; p < src.size(); ++p) out(b, p, ch, 0) = src[p];
    }
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> channels_as_positions(const Tensor4<Scalar>& t, Index h,
                                      Index w) {
  Tensor4<Scalar> out(Shape4{t.n(), t.h(), h, w});
  for (Index b = 0; b < t.n(); ++b) {
    for (Index ch = 0; ch < t.h(); ++ch) {
      auto dst = out.flat_plane(b, ch);
      for (Index p = 0; p < dst.size(); ++p) dst[p] = t(b, p, ch, 0);
    }
  }
  return out;
}

template <typename Scalar>
void check_spatial(const Tensor4<Scalar>& x,
                   const NAMSpatialParams<Scalar>& params) {
  require(x.h() == params.h && x.w() == params.w,
          "nam_spatial bound to " + std::to_string(params.h) + "x" +
              std::to_string(params.w) + " but input is " +
              std::to_string(x.h()) + "x" + std::to_string(x.w()));
  require(params.bn_spatial.channels() == params.h * params.w,
          dim_mismatch("nam_spatial parameter length",
                       params.bn_spatial.channels(), params.h * params.w));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Channel attention

template <typename Scalar>
NAMForward<Scalar> nam_channel_forward(const Tensor4<Scalar>& input,
                                       const NAMChannelParams<Scalar>& params,
                                       Mode mode, OpCounter* counter = nullptr) {
  detail::require(input.c() == params.bn.channels(),
                  detail::dim_mismatch("nam_channel channels", input.c(),
                                       params.bn.channels()));
  return detail::nam_gate_forward(input, params.bn, mode, counter);
}

template <typename Scalar>
Tensor4<Scalar> nam_channel(const Tensor4<Scalar>& input,
                            const NAMChannelParams<Scalar>& params, Mode mode,
                            OpCounter* counter = nullptr) {
  return nam_channel_forward(input, params, mode, counter).output;
}

template <typename Scalar>
NAMGrads<Scalar> nam_channel_grad(const Tensor4<Scalar>& input,
                                  const NAMChannelParams<Scalar>& params,
                                  const NAMCache<Scalar>& cache,
                                  const Tensor4<Scalar>& grad_out,
                                  Mode mode = Mode::kTrain) {
  return detail::nam_gate_grad(input, params.bn, cache, grad_out, mode);
}

// ---------------------------------------------------------------------------
// Spatial attention. The cache is expressed in the transposed layout.

template <typename Scalar>
NAMForward<Scalar> nam_spatial_forward(const Tensor4<Scalar>& input,
                                       const NAMSpatialParams<Scalar>& params,
                                       Mode mode, OpCounter* counter = nullptr) {
  detail::check_spatial(input, params);
  NAMForward<Scalar> f = detail::nam_gate_forward(
      detail::positions_as_channels(input), params.bn_spatial, mode, counter);
  f.output = detail::channels_as_positions(f.output, params.h, params.w);
  return f;
}

template <typename Scalar>
Tensor4<Scalar> nam_spatial(const Tensor4<Scalar>& input,
                            const NAMSpatialParams<Scalar>& params, Mode mode,
                            OpCounter* counter = nullptr) {
  return nam_spatial_forward(input, params, mode, counter).output;
}

template <typename Scalar>
NAMGrads<Scalar> nam_spatial_grad(const Tensor4<Scalar>& input,
                                  const NAMSpatialParams<Scalar>& params,
                                  const NAMCache<Scalar>& cache,
                                  const Tensor4<Scalar>& grad_out,
                                  Mode mode = Mode::kTrain) {
  detail::check_spatial(input, params);
  NAMGrads<Scalar> g = detail::nam_gate_grad(
      detail::positions_as_channels(input), params.bn_spatial, cache,
      detail::positions_as_channels(grad_out), mode);
  g.input = detail::channels_as_positions(g.input, params.h, params.w);
  return g;
}

// Channel then spatial, in series.
template <typename Scalar>
Tensor4<Scalar> nam_serial(const Tensor4<Scalar>& input,
                           const NAMChannelParams<Scalar>& channel,
                           const NAMSpatialParams<Scalar>& spatial, Mode mode,
                           OpCounter* counter = nullptr) {
  return nam_spatial(nam_channel(input, channel, mode, counter), spatial, mode,
                     counter);
}

}  // namespace fasternam

#endif  // FASTERNAM_NAM_HPP_
