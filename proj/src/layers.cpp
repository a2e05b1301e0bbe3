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

#include "fasternam/layers.hpp"

#include <string>

namespace fasternam {

void Layer::zero_grad() {
  for (ParamRef& p : parameters()) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

const Tensor& detail::cached_input(const std::optional<Tensor>& input,
                                   LayerKind kind) {
  if (!input) {
    throw ValidationError(std::string(keyword(kind)) +
                          ": backward called before forward");
  }
  return *input;
}

// --- conv -------------------------------------------------------------------

ConvLayer::ConvLayer(ConvSpec spec, ConvParams<double> params)
    : spec_(spec),
      params_(std::move(params)),
      grads_{Tensor(params_.kernel.shape()), Vec<double>::Zero(spec.c_out)} {}

std::vector<ParamRef> ConvLayer::parameters() {
  return {{"kernel", detail::span_of(params_.kernel), detail::span_of(grads_.kernel)},
          {"bias", detail::span_of(params_.bias), detail::span_of(grads_.bias)}};
}

Tensor ConvLayer::do_forward(const Tensor& x, Mode, OpCounter* counter) {
  input_ = x;
  return conv2d(x, params_.kernel, params_.bias, spec_, counter);
}

Tensor ConvLayer::do_backward(const Tensor& grad_out) {
  ConvGrads<double> g = conv2d_grad(detail::cached_input(input_, kind()),
                                    params_.kernel, spec_, grad_out);
  grads_.kernel.array() += g.kernel.array();
  grads_.bias += g.bias;
  return std::move(g.input);
}

// --- pwconv -----------------------------------------------------------------

PWConvLayer::PWConvLayer(PWConvParams<double> params)
    : params_(std::move(params)),
      grads_{Mat<double>::Zero(params_.weights.rows(), params_.weights.cols()),
             Vec<double>::Zero(params_.bias.size())} {}

std::vector<ParamRef> PWConvLayer::parameters() {
  return {{"weights", detail::span_of(params_.weights), detail::span_of(grads_.weights)},
          {"bias", detail::span_of(params_.bias), detail::span_of(grads_.bias)}};
}

Tensor PWConvLayer::do_forward(const Tensor& x, Mode, OpCounter* counter) {
  input_ = x;
  return pwconv(x, params_.weights, params_.bias, counter);
}

Tensor PWConvLayer::do_backward(const Tensor& grad_out) {
  PWConvGrads<double> g = pwconv_grad(detail::cached_input(input_, kind()),
                                      params_.weights, grad_out);
  grads_.weights += g.weights;
  grads_.bias += g.bias;
  return std::move(g.input);
}

// --- pconv ------------------------------------------------------------------

PConvLayer::PConvLayer(PConvSpec spec, Tensor weights)
    : spec_(spec), weights_(std::move(weights)), grad_weights_(weights_.shape()) {
  spec_.validate();
}

std::vector<ParamRef> PConvLayer::parameters() {
  return {{"weights", detail::span_of(weights_), detail::span_of(grad_weights_)}};
}

Tensor PConvLayer::do_forward(const Tensor& x, Mode, OpCounter* counter) {
  input_ = x;
  return pconv(x, weights_, spec_, counter);
}

Tensor PConvLayer::do_backward(const Tensor& grad_out) {
  PConvGrads<double> g =
      pconv_grad(detail::cached_input(input_, kind()), weights_, spec_, grad_out);
  grad_weights_.array() += g.weights.array();
  return std::move(g.input);
}

// --- batch norm -------------------------------------------------------------

BatchNormLayer::BatchNormLayer(BNParams<double> params)
    : params_(std::move(params)),
      grad_gamma_(Vec<double>::Zero(params_.channels())),
      grad_beta_(Vec<double>::Zero(params_.channels())) {}

std::vector<ParamRef> BatchNormLayer::parameters() {
  return {{"gamma", detail::span_of(params_.gamma), detail::span_of(grad_gamma_)},
          {"beta", detail::span_of(params_.beta), detail::span_of(grad_beta_)}};
}

Tensor BatchNormLayer::do_forward(const Tensor& x, Mode mode, OpCounter* counter) {
  BNForward<double> f = batchnorm(x, params_, mode, counter);
  input_ = x;
  mean_ = f.mean;
  var_ = f.var;
  mode_ = mode;
  if (mode == Mode::kTrain) update_running_stats(params_, mean_, var_);
  return std::move(f.output);
}

Tensor BatchNormLayer::do_backward(const Tensor& grad_out) {
  BNGrads<double> g = batchnorm_grad(detail::cached_input(input_, kind()),
                                     params_, mean_, var_, grad_out, mode_);
  grad_gamma_ += g.gamma;
  grad_beta_ += g.beta;
  return std::move(g.input);
}

// --- relu -------------------------------------------------------------------

Tensor ReLULayer::do_forward(const Tensor& x, Mode, OpCounter* counter) {
  input_ = x;
  return relu(x, counter);
}

Tensor ReLULayer::do_backward(const Tensor& grad_out) {
  return relu_grad(detail::cached_input(input_, kind()), grad_out);
}

// --- fasternet --------------------------------------------------------------

FasterNetLayer::FasterNetLayer(FasterNetBlockParams<double> params)
    : params_(std::move(params)) {
  params_.validate();
  grads_.pconv = Tensor(params_.pconv.shape());
  grads_.pw1 = Mat<double>::Zero(params_.pw1.rows(), params_.pw1.cols());
  grads_.pw1_bias = Vec<double>::Zero(params_.pw1_bias.size());
  grads_.bn1_gamma = Vec<double>::Zero(params_.bn1.channels());
  grads_.bn1_beta = Vec<double>::Zero(params_.bn1.channels());
  grads_.pw2 = Mat<double>::Zero(params_.pw2.rows(), params_.pw2.cols());
  grads_.pw2_bias = Vec<double>::Zero(params_.pw2_bias.size());
}

std::vector<ParamRef> FasterNetLayer::parameters() {
  using detail::span_of;
  return {{"pconv", span_of(params_.pconv), span_of(grads_.pconv)},
          {"pw1", span_of(params_.pw1), span_of(grads_.pw1)},
          {"pw1_bias", span_of(params_.pw1_bias), span_of(grads_.pw1_bias)},
          {"bn1_gamma", span_of(params_.bn1.gamma), span_of(grads_.bn1_gamma)},
          {"bn1_beta", span_of(params_.bn1.beta), span_of(grads_.bn1_beta)},
          {"pw2", span_of(params_.pw2), span_of(grads_.pw2)},
          {"pw2_bias", span_of(params_.pw2_bias), span_of(grads_.pw2_bias)}};
}

Tensor FasterNetLayer::do_forward(const Tensor& x, Mode mode, OpCounter* counter) {
  FasterNetForward<double> f = fasternet_block_forward(x, params_, mode, counter);
  input_ = x;
  cache_ = std::move(f.cache);
  mode_ = mode;
  if (mode == Mode::kTrain) {
    update_running_stats(params_.bn1, cache_.bn.mean, cache_.bn.var);
  }
  return std::move(f.output);
}

Tensor FasterNetLayer::do_backward(const Tensor& grad_out) {
  FasterNetGrads<double> g = fasternet_block_grad(
      detail::cached_input(input_, kind()), params_, cache_, grad_out, mode_);
  grads_.pconv.array() += g.pconv.array();
  grads_.pw1 += g.pw1;
  grads_.pw1_bias += g.pw1_bias;
  grads_.bn1_gamma += g.bn1_gamma;
  grads_.bn1_beta += g.bn1_beta;
  grads_.pw2 += g.pw2;
  grads_.pw2_bias += g.pw2_bias;
  return std::move(g.input);
}

// --- nam --------------------------------------------------------------------

NamChannelLayer::NamChannelLayer(NAMChannelParams<double> params)
    : params_(std::move(params)),
      grad_gamma_(Vec<double>::Zero(params_.bn.channels())),
      grad_beta_(Vec<double>::Zero(params_.bn.channels())) {}

std::vector<ParamRef> NamChannelLayer::parameters() {
  return {{"gamma", detail::span_of(params_.bn.gamma), detail::span_of(grad_gamma_)},
          {"beta", detail::span_of(params_.bn.beta), detail::span_of(grad_beta_)}};
}

Tensor NamChannelLayer::do_forward(const Tensor& x, Mode mode, OpCounter* counter) {
  NAMForward<double> f = nam_channel_forward(x, params_, mode, counter);
  input_ = x;
  cache_ = std::move(f.cache);
  mode_ = mode;
  if (mode == Mode::kTrain) {
    update_running_stats(params_.bn, cache_.bn.mean, cache_.bn.var);
  }
  return std::move(f.output);
}

Tensor NamChannelLayer::do_backward(const Tensor& grad_out) {
  NAMGrads<double> g = nam_channel_grad(detail::cached_input(input_, kind()),
                                        params_, cache_, grad_out, mode_);
  grad_gamma_ += g.gamma;
  grad_beta_ += g.beta;
  return std::move(g.input);
}

NamSpatialLayer::NamSpatialLayer(NAMSpatialParams<double> params)
    : params_(std::move(params)),
      grad_gamma_(Vec<double>::Zero(params_.bn_spatial.channels())),
      grad_beta_(Vec<double>::Zero(params_.bn_spatial.channels())) {}

std::vector<ParamRef> NamSpatialLayer::parameters() {
  return {{"lambda", detail::span_of(params_.bn_spatial.gamma),
           detail::span_of(grad_gamma_)},
          {"beta", detail::span_of(params_.bn_spatial.beta),
           detail::span_of(grad_beta_)}};
}

Tensor NamSpatialLayer::do_forward(const Tensor& x, Mode mode, OpCounter* counter) {
  NAMForward<double> f = nam_spatial_forward(x, params_, mode, counter);
  input_ = x;
  cache_ = std::move(f.cache);
  mode_ = mode;
  if (mode == Mode::kTrain) {
    update_running_stats(params_.bn_spatial, cache_.bn.mean, cache_.bn.var);
  }
  return std::move(f.output);
}

Tensor NamSpatialLayer::do_backward(const Tensor& grad_out) {
  NAMGrads<double> g = nam_spatial_grad(detail::cached_input(input_, kind()),
                                        params_, cache_, grad_out, mode_);
  grad_gamma_ += g.gamma;
  grad_beta_ += g.beta;
  return std::move(g.input);
}

// --- residual ---------------------------------------------------------------

const Tensor& ResidualBeginLayer::skip() const {
  return detail::cached_input(skip_, kind());
}

void ResidualBeginLayer::add_skip_grad(const Tensor& grad) {
  if (skip_grad_) {
    skip_grad_->array() += grad.array();
  } else {
    skip_grad_ = grad;
  }
}

Tensor ResidualBeginLayer::do_forward(const Tensor& x, Mode, OpCounter*) {
  skip_ = x;
  skip_grad_.reset();
  return x;
}

Tensor ResidualBeginLayer::do_backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  if (skip_grad_) {
    g.array() += skip_grad_->array();
    skip_grad_.reset();
  }
  return g;
}

Tensor ResidualEndLayer::do_forward(const Tensor& x, Mode, OpCounter* counter) {
  const Tensor& skip = begin_->skip();
  if (!(skip.shape() == x.shape())) {
    throw ValidationError("residual branch output " + to_string(x.shape()) +
                          " does not match skip " + to_string(skip.shape()));
  }
  Tensor out = x;
  out.array() += skip.array();
  charge(counter, x.size());
  return out;
}

Tensor ResidualEndLayer::do_backward(const Tensor& grad_out) {
  begin_->add_skip_grad(grad_out);
  return grad_out;
}

// --- gap head ---------------------------------------------------------------

GapHeadLayer::GapHeadLayer(PWConvParams<double> params)
    : params_(std::move(params)),
      grads_{Mat<double>::Zero(params_.weights.rows(), params_.weights.cols()),
             Vec<double>::Zero(params_.bias.size())} {}

std::vector<ParamRef> GapHeadLayer::parameters() {
  return {{"weights", detail::span_of(params_.weights), detail::span_of(grads_.weights)},
          {"bias", detail::span_of(params_.bias), detail::span_of(grads_.bias)}};
}

Tensor GapHeadLayer::do_forward(const Tensor& x, Mode, OpCounter* counter) {
  Tensor pooled(Shape4{x.n(), x.c(), 1, 1});
  for (Index b = 0; b < x.n(); ++b) {
    for (Index ch = 0; ch < x.c(); ++ch) {
      pooled(b, ch, 0, 0) = x.flat_plane(b, ch).mean();
    }
  }
  charge(counter, x.size());
  input_ = x;
  pooled_ = pooled;
  return pwconv(pooled, params_.weights, params_.bias, counter);
}

Tensor GapHeadLayer::do_backward(const Tensor& grad_out) {
  const Tensor& x = detail::cached_input(input_, kind());
  PWConvGrads<double> g = pwconv_grad(*pooled_, params_.weights, grad_out);
  grads_.weights += g.weights;
  grads_.bias += g.bias;
  Tensor grad_in(x.shape());
  const double inv_area = 1.0 / static_cast<double>(x.h() * x.w());
  for (Index b = 0; b < x.n(); ++b) {
    for (Index ch = 0; ch < x.c(); ++ch) {
      grad_in.flat_plane(b, ch).setConstant(g.input(b, ch, 0, 0) * inv_area);
    }
  }
  return grad_in;
}

}  // namespace fasternam
