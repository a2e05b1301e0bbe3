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

// Reference layer math: convolution, batch normalization, ReLU. Every
// forward op has an exact analytic backward companion.

#ifndef FASTERNAM_OPS_HPP_
#define FASTERNAM_OPS_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <utility>

#include "fasternam/error.hpp"
#include "fasternam/tensor.hpp"

namespace fasternam {

// Tallies arithmetic as kernels execute it. One multiply-accumulate counts
// as one FLOP; elementwise ops charge their per-element convention
// (batch norm 2, ReLU 1, sigmoid 4, multiply 1, add 1).
struct OpCounter {
  std::int64_t flops = 0;
  void charge(std::int64_t n) { flops += n; }
};

inline void charge(OpCounter* counter, std::int64_t n) {
  if (counter != nullptr) counter->charge(n);
}

enum class Mode { kTrain, kEval };

struct ConvSpec {
  Index c_in = 1;
  Index c_out = 1;
  Index k = 1;
  Index stride = 1;
  Index padding = 0;

  // Floor semantics: trailing rows/cols that do not fit a full window are
  // dropped.
  Index out_dim(Index in) const { return (in + 2 * padding - k) / stride + 1; }

  void validate() const {
    if (c_in < 1 || c_out < 1 || k < 1 || stride < 1 || padding < 0) {
      throw ValidationError(
          "conv spec needs c_in, c_out, k, stride >= 1 and padding >= 0 (c_in=" +
          std::to_string(c_in) + " c_out=" + std::to_string(c_out) +
          " k=" + std::to_string(k) + " stride=" + std::to_string(stride) +
          " padding=" + std::to_string(padding) + ")");
    }
  }

  void validate_input(Index h, Index w) const {
    validate();
    if (h + 2 * padding < k || w + 2 * padding < k) {
      throw ValidationError("kernel k=" + std::to_string(k) +
                            " does not fit padded input " + std::to_string(h) +
                            "x" + std::to_string(w));
    }
  }
};

namespace detail {

template <typename Scalar>
using ConstWindow =
    Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                                  Eigen::RowMajor>,
               0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
template <typename Scalar>
using Window = Eigen::Map<
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, 0,
    Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

// The (rows x cols) sub-grid of plane (b, ch) starting at (y, x), sampled
// every `stride` pixels.
template <typename Scalar>
ConstWindow<Scalar> window(const Tensor4<Scalar>& t, Index b, Index ch, Index y,
                           Index x, Index rows, Index cols, Index stride) {
  return ConstWindow<Scalar>(
      t.data() + t.offset(b, ch, y, x), rows, cols,
      Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(stride * t.w(), stride));
}

template <typename Scalar>
Window<Scalar> window(Tensor4<Scalar>& t, Index b, Index ch, Index y, Index x,
                      Index rows, Index cols, Index stride) {
  return Window<Scalar>(
      t.data() + t.offset(b, ch, y, x), rows, cols,
      Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(stride * t.w(), stride));
}

template <typename Scalar>
Tensor4<Scalar> zero_pad(const Tensor4<Scalar>& t, Index pad) {
  if (pad == 0) return t;
  Tensor4<Scalar> out(Shape4{t.n(), t.c(), t.h() + 2 * pad, t.w() + 2 * pad});
  for (Index b = 0; b < t.n(); ++b) {
    for (Index ch = 0; ch < t.c(); ++ch) {
      out.plane(b, ch).block(pad, pad, t.h(), t.w()) = t.plane(b, ch);
    }
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> crop(const Tensor4<Scalar>& t, Index pad) {
  if (pad == 0) return t;
  Tensor4<Scalar> out(Shape4{t.n(), t.c(), t.h() - 2 * pad, t.w() - 2 * pad});
  for (Index b = 0; b < t.n(); ++b) {
    for (Index ch = 0; ch < t.c(); ++ch) {
      out.plane(b, ch) = t.plane(b, ch).block(pad, pad, out.h(), out.w());
    }
  }
  return out;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

inline std::string dim_mismatch(const std::string& name, Index got,
                                Index want) {
  return name + " mismatch: got " + std::to_string(got) + ", expected " +
         std::to_string(want);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution (cross-correlation, zero padding, integer stride).

template <typename Scalar>
void check_conv_args(const Tensor4<Scalar>& input, const Tensor4<Scalar>& kernel,
                     const ConvSpec& spec) {
  spec.validate_input(input.h(), input.w());
  detail::require(input.c() == spec.c_in,
                  detail::dim_mismatch("input channels", input.c(), spec.c_in));
  detail::require(kernel.n() == spec.c_out,
                  detail::dim_mismatch("kernel output channels", kernel.n(),
                                       spec.c_out));
  detail::require(kernel.c() == spec.c_in,
                  detail::dim_mismatch("kernel input channels", kernel.c(),
                                       spec.c_in));
  detail::require(kernel.h() == spec.k && kernel.w() == spec.k,
                  "kernel spatial size mismatch: got " +
                      std::to_string(kernel.h()) + "x" +
                      std::to_string(kernel.w()) + ", expected " +
                      std::to_string(spec.k) + "x" + std::to_string(spec.k));
}

template <typename Scalar>
Tensor4<Scalar> conv2d(const Tensor4<Scalar>& input,
                       const Tensor4<Scalar>& kernel, const Vec<Scalar>& bias,
                       const ConvSpec& spec, OpCounter* counter = nullptr) {
  check_conv_args(input, kernel, spec);
  detail::require(bias.size() == spec.c_out,
                  detail::dim_mismatch("bias length", bias.size(), spec.c_out));

  const Index ho = spec.out_dim(input.h());
  const Index wo = spec.out_dim(input.w());
  const Tensor4<Scalar> padded = detail::zero_pad(input, spec.padding);
  Tensor4<Scalar> out(Shape4{input.n(), spec.c_out, ho, wo});

  std::int64_t macs = 0;
  for (Index b = 0; b < input.n(); ++b) {
    for (Index o = 0; o < spec.c_out; ++o) {
      auto acc = out.plane(b, o);
      acc.setConstant(bias[o]);
      for (Index i = 0; i < spec.c_in; ++i) {
        for (Index ky = 0; ky < spec.k; ++ky) {
          for (Index kx = 0; kx < spec.k; ++kx) {
            acc += kernel(o, i, ky, kx) *
                   detail::window(padded, b, i, ky, kx, ho, wo, spec.stride);
            macs += acc.size();
          }
        }
      }
    }
  }
  charge(counter, macs);
  return out;
}

template <typename Scalar>
struct ConvGrads {
  Tensor4<Scalar> input;
  Tensor4<Scalar> kernel;
  Vec<Scalar> bias;
};

template <typename Scalar>
ConvGrads<Scalar> conv2d_grad(const Tensor4<Scalar>& input,
                              const Tensor4<Scalar>& kernel,
                              const ConvSpec& spec,
                              const Tensor4<Scalar>& grad_out) {
  check_conv_args(input, kernel, spec);
  const Index ho = spec.out_dim(input.h());
  const Index wo = spec.out_dim(input.w());
  const Shape4 expected{input.n(), spec.c_out, ho, wo};
  detail::require(grad_out.shape() == expected,
                  "grad_out shape " + to_string(grad_out.shape()) +
                      " does not match conv output " + to_string(expected));

  const Tensor4<Scalar> padded = detail::zero_pad(input, spec.padding);
  Tensor4<Scalar> grad_padded(padded.shape());
  ConvGrads<Scalar> g{Tensor4<Scalar>(), Tensor4<Scalar>(kernel.shape()),
                      Vec<Scalar>::Zero(spec.c_out)};

  for (Index b = 0; b < input.n(); ++b) {
    for (Index o = 0; o < spec.c_out; ++o) {
      const auto go = grad_out.plane(b, o);
      g.bias[o] += go.sum();
      for (Index i = 0; i < spec.c_in; ++i) {
        for (Index ky = 0; ky < spec.k; ++ky) {
          for (Index kx = 0; kx < spec.k; ++kx) {
            g.kernel(o, i, ky, kx) +=
                (go * detail::window(padded, b, i, ky, kx, ho, wo, spec.stride))
                    .sum();
            detail::window(grad_padded, b, i, ky, kx, ho, wo, spec.stride) +=
                kernel(o, i, ky, kx) * go;
          }
        }
      }
    }
  }
  g.input = detail::crop(grad_padded, spec.padding);
  return g;
}

// ---------------------------------------------------------------------------
// Batch normalization: y = gamma * (x - mean) / sqrt(var + eps) + beta,
// statistics per channel over (n, h, w).

template <typename Scalar>
struct BNParams {
  Vec<Scalar> gamma;
  Vec<Scalar> beta;
  Vec<Scalar> running_mean;
  Vec<Scalar> running_var;
  Scalar eps = Scalar(1e-5);

  static BNParams identity(Index channels) {
    return BNParams{Vec<Scalar>::Ones(channels), Vec<Scalar>::Zero(channels),
                    Vec<Scalar>::Zero(channels), Vec<Scalar>::Ones(channels),
                    Scalar(1e-5)};
  }

  Index channels() const { return gamma.size(); }

  void validate(Index expected_channels) const {
    detail::require(gamma.size() == expected_channels,
                    detail::dim_mismatch("batchnorm channels", gamma.size(),
                                         expected_channels));
    detail::require(beta.size() == gamma.size() &&
                        running_mean.size() == gamma.size() &&
                        running_var.size() == gamma.size(),
                    "batchnorm parameter sequences differ in length");
    detail::require((running_var.array() >= Scalar(0)).all(),
                    "batchnorm running_var must be non-negative");
    detail::require(eps >= Scalar(0), "batchnorm eps must be non-negative");
  }
};

template <typename Scalar>
struct BNForward {
  Tensor4<Scalar> output;
  Vec<Scalar> mean;
  Vec<Scalar> var;
};

// Population mean and variance per channel over (n, h, w).
template <typename Scalar>
std::pair<Vec<Scalar>, Vec<Scalar>> channel_moments(const Tensor4<Scalar>& x) {
  const Scalar count = Scalar(x.n() * x.h() * x.w());
  Vec<Scalar> mean = Vec<Scalar>::Zero(x.c());
  Vec<Scalar> var = Vec<Scalar>::Zero(x.c());
  for (Index ch = 0; ch < x.c(); ++ch) {
    for (Index b = 0; b < x.n(); ++b) mean[ch] += x.flat_plane(b, ch).sum();
    mean[ch] /= count;
    for (Index b = 0; b < x.n(); ++b) {
      var[ch] += (x.flat_plane(b, ch) - mean[ch]).square().sum();
    }
    var[ch] /= count;
  }
  return {mean, var};
}

template <typename Scalar>
BNForward<Scalar> batchnorm(const Tensor4<Scalar>& input,
                            const BNParams<Scalar>& params, Mode mode,
                            OpCounter* counter = nullptr) {
  params.validate(input.c());
  BNForward<Scalar> r;
  if (mode == Mode::kTrain) {
    std::tie(r.mean, r.var) = channel_moments(input);
  } else {
    r.mean = params.running_mean;
    r.var = params.running_var;
  }
  r.output = Tensor4<Scalar>(input.shape());
  for (Index ch = 0; ch < input.c(); ++ch) {
    const Scalar inv_std = Scalar(1) / std::sqrt(r.var[ch] + params.eps);
    for (Index b = 0; b < input.n(); ++b) {
      r.output.flat_plane(b, ch) =
          params.gamma[ch] * ((input.flat_plane(b, ch) - r.mean[ch]) * inv_std) +
          params.beta[ch];
    }
  }
  charge(counter, 2 * input.size());
  return r;
}

template <typename Scalar>
struct BNGrads {
  Tensor4<Scalar> input;
  Vec<Scalar> gamma;
  Vec<Scalar> beta;
};

// In training mode the batch statistics are differentiated through; in eval
// mode they are constants.
template <typename Scalar>
BNGrads<Scalar> batchnorm_grad(const Tensor4<Scalar>& input,
                               const BNParams<Scalar>& params,
                               const Vec<Scalar>& mean, const Vec<Scalar>& var,
                               const Tensor4<Scalar>& grad_out,
                               Mode mode = Mode::kTrain) {
  params.validate(input.c());
  detail::require(grad_out.shape() == input.shape(),
                  "grad_out shape " + to_string(grad_out.shape()) +
                      " does not match batchnorm input " +
                      to_string(input.shape()));
  detail::require(mean.size() == input.c() && var.size() == input.c(),
                  "saved batch statistics do not match channel count");

  const Scalar count = Scalar(input.n() * input.h() * input.w());
  BNGrads<Scalar> g{Tensor4<Scalar>(input.shape()),
                    Vec<Scalar>::Zero(input.c()), Vec<Scalar>::Zero(input.c())};
  for (Index ch = 0; ch < input.c(); ++ch) {
    const Scalar inv_std = Scalar(1) / std::sqrt(var[ch] + params.eps);
    Scalar sum_dy = 0;
    Scalar sum_dy_xhat = 0;
    for (Index b = 0; b < input.n(); ++b) {
      const auto dy = grad_out.flat_plane(b, ch);
      sum_dy += dy.sum();
      sum_dy_xhat += (dy * (input.flat_plane(b, ch) - mean[ch])).sum() * inv_std;
    }
    g.beta[ch] = sum_dy;
    g.gamma[ch] = sum_dy_xhat;
    const Scalar scale = params.gamma[ch] * inv_std;
    for (Index b = 0; b < input.n(); ++b) {
      if (mode == Mode::kTrain) {
        const auto xhat = (input.flat_plane(b, ch) - mean[ch]) * inv_std;
        g.input.flat_plane(b, ch) =
            scale * (grad_out.flat_plane(b, ch) - sum_dy / count -
                     xhat * (sum_dy_xhat / count));
      } else {
        g.input.flat_plane(b, ch) = scale * grad_out.flat_plane(b, ch);
      }
    }
  }
  return g;
}

// Exponential moving average of batch statistics, updated in place.
template <typename Scalar>
void update_running_stats(BNParams<Scalar>& params, const Vec<Scalar>& batch_mean,
                          const Vec<Scalar>& batch_var,
                          Scalar momentum = Scalar(0.1)) {
  params.running_mean =
      (Scalar(1) - momentum) * params.running_mean + momentum * batch_mean;
  params.running_var =
      (Scalar(1) - momentum) * params.running_var + momentum * batch_var;
}

// ---------------------------------------------------------------------------
// Activations.

template <typename Scalar>
Tensor4<Scalar> relu(const Tensor4<Scalar>& input,
                     OpCounter* counter = nullptr) {
  charge(counter, input.size());
  return Tensor4<Scalar>(input.shape(), input.array().max(Scalar(0)));
}

// Subgradient at 0 is 0.
template <typename Scalar>
Tensor4<Scalar> relu_grad(const Tensor4<Scalar>& input,
                          const Tensor4<Scalar>& grad_out) {
  detail::require(grad_out.shape() == input.shape(),
                  "relu grad_out shape mismatch");
  return Tensor4<Scalar>(
      input.shape(),
      (input.array() > Scalar(0)).select(grad_out.array(), Scalar(0)));
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) + (-x).exp()).inverse();
}

}  // namespace fasternam

#endif  // FASTERNAM_OPS_HPP_
