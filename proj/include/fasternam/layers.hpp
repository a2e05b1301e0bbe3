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

// Trainable 64-bit layers. Each wraps the free-function forward/backward
// pair of one op, owns its parameters plus matching gradient buffers, and
// caches what the backward pass needs from the latest forward.

#ifndef FASTERNAM_LAYERS_HPP_
#define FASTERNAM_LAYERS_HPP_

#include <optional>
#include <vector>

#include "fasternam/blocks.hpp"
#include "fasternam/gradcheck.hpp"
#include "fasternam/graph.hpp"
#include "fasternam/nam.hpp"
#include "fasternam/ops.hpp"
#include "fasternam/tensor.hpp"

namespace fasternam {

using Tensor = Tensor4<double>;

class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;

  Tensor forward(const Tensor& x, Mode mode, OpCounter* counter = nullptr) {
    return do_forward(x, mode, counter);
  }
  // Returns d(loss)/d(input); adds parameter gradients to the buffers.
  Tensor backward(const Tensor& grad_out) { return do_backward(grad_out); }

  virtual std::vector<ParamRef> parameters() { return {}; }
  void zero_grad();

 private:
  virtual Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) = 0;
  virtual Tensor do_backward(const Tensor& grad_out) = 0;
};

namespace detail {

inline std::span<double> span_of(Tensor& t) { return {t.data(), static_cast<std::size_t>(t.size())}; }
inline std::span<double> span_of(Mat<double>& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> span_of(Vec<double>& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Throws unless a forward pass has populated the cache.
const Tensor& cached_input(const std::optional<Tensor>& input, LayerKind kind);

}  // namespace detail

class ConvLayer : public Layer {
 public:
  ConvLayer(ConvSpec spec, ConvParams<double> params);
  LayerKind kind() const override { return LayerKind::kConv; }
  std::vector<ParamRef> parameters() override;

  const ConvParams<double>& params() const { return params_; }

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  ConvSpec spec_;
  ConvParams<double> params_;
  ConvParams<double> grads_;
  std::optional<Tensor> input_;
};

class PWConvLayer : public Layer {
 public:
  explicit PWConvLayer(PWConvParams<double> params);
  LayerKind kind() const override { return LayerKind::kPWConv; }
  std::vector<ParamRef> parameters() override;

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  PWConvParams<double> params_;
  PWConvParams<double> grads_;
  std::optional<Tensor> input_;
};

class PConvLayer : public Layer {
 public:
  PConvLayer(PConvSpec spec, Tensor weights);
  LayerKind kind() const override { return LayerKind::kPConv; }
  std::vector<ParamRef> parameters() override;

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  PConvSpec spec_;
  Tensor weights_;
  Tensor grad_weights_;
  std::optional<Tensor> input_;
};

// Training-mode forward folds the batch statistics into the running
// averages (momentum 0.1).
class BatchNormLayer : public Layer {
 public:
  explicit BatchNormLayer(BNParams<double> params);
  LayerKind kind() const override { return LayerKind::kBatchNorm; }
  std::vector<ParamRef> parameters() override;

  BNParams<double>& params() { return params_; }

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  BNParams<double> params_;
  Vec<double> grad_gamma_;
  Vec<double> grad_beta_;
  std::optional<Tensor> input_;
  Vec<double> mean_;
  Vec<double> var_;
  Mode mode_ = Mode::kTrain;
};

class ReLULayer : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kReLU; }

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  std::optional<Tensor> input_;
};

class FasterNetLayer : public Layer {
 public:
  explicit FasterNetLayer(FasterNetBlockParams<double> params);
  LayerKind kind() const override { return LayerKind::kFasterNet; }
  std::vector<ParamRef> parameters() override;

  FasterNetBlockParams<double>& params() { return params_; }

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  FasterNetBlockParams<double> params_;
  FasterNetGrads<double> grads_;
  std::optional<Tensor> input_;
  FasterNetCache<double> cache_;
  Mode mode_ = Mode::kTrain;
};

class NamChannelLayer : public Layer {
 public:
  explicit NamChannelLayer(NAMChannelParams<double> params);
  LayerKind kind() const override { return LayerKind::kNamChannel; }
  std::vector<ParamRef> parameters() override;

  NAMChannelParams<double>& params() { return params_; }

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  NAMChannelParams<double> params_;
  Vec<double> grad_gamma_;
  Vec<double> grad_beta_;
  std::optional<Tensor> input_;
  NAMCache<double> cache_;
  Mode mode_ = Mode::kTrain;
};

class NamSpatialLayer : public Layer {
 public:
  explicit NamSpatialLayer(NAMSpatialParams<double> params);
  LayerKind kind() const override { return LayerKind::kNamSpatial; }
  std::vector<ParamRef> parameters() override;

  NAMSpatialParams<double>& params() { return params_; }

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  NAMSpatialParams<double> params_;
  Vec<double> grad_gamma_;
  Vec<double> grad_beta_;
  std::optional<Tensor> input_;
  NAMCache<double> cache_;
  Mode mode_ = Mode::kTrain;
};

// Identity that remembers its input so the paired ResidualEndLayer can add
// it back; during backward it merges the skip-path gradient.
class ResidualBeginLayer : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kResidualBegin; }

  const Tensor& skip() const;
  void add_skip_grad(const Tensor& grad);

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  std::optional<Tensor> skip_;
  std::optional<Tensor> skip_grad_;
};

class ResidualEndLayer : public Layer {
 public:
  explicit ResidualEndLayer(ResidualBeginLayer* begin) : begin_(begin) {}
  LayerKind kind() const override { return LayerKind::kResidualEnd; }

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  ResidualBeginLayer* begin_;
};

// Global average pool followed by a pointwise projection to class logits;
// output (n, classes, 1, 1).
class GapHeadLayer : public Layer {
 public:
  explicit GapHeadLayer(PWConvParams<double> params);
  LayerKind kind() const override { return LayerKind::kGapHead; }
  std::vector<ParamRef> parameters() override;

 private:
  Tensor do_forward(const Tensor& x, Mode mode, OpCounter* counter) override;
  Tensor do_backward(const Tensor& grad_out) override;

  PWConvParams<double> params_;
  PWConvParams<double> grads_;
  std::optional<Tensor> input_;
  std::optional<Tensor> pooled_;
};

}  // namespace fasternam

#endif  // FASTERNAM_LAYERS_HPP_
