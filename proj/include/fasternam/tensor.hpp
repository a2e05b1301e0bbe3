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

#ifndef FASTERNAM_TENSOR_HPP_
#define FASTERNAM_TENSOR_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <random>
#include <string>

#include "fasternam/error.hpp"

namespace fasternam {

using Index = Eigen::Index;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct Shape4 {
  Index n = 1;
  Index c = 1;
  Index h = 1;
  Index w = 1;

  Index size() const { return n * c * h * w; }
  Index plane_size() const { return h * w; }
  bool operator==(const Shape4&) const = default;
};

inline std::string to_string(const Shape4& s) {
  return "(" + std::to_string(s.n) + ", " + std::to_string(s.c) + ", " +
         std::to_string(s.h) + ", " + std::to_string(s.w) + ")";
}

inline std::ostream& operator<<(std::ostream& os, const Shape4& s) {
  return os << to_string(s);
}

// Dense (n, c, h, w) array, row-major. Every (n, c) plane is a contiguous
// h x w block that can be viewed as an Eigen row-major array.
template <typename Scalar_>
class Tensor4 {
 public:
  using Scalar = Scalar_;
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using PlaneArray =
      Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using PlaneMap = Eigen::Map<PlaneArray>;
  using ConstPlaneMap = Eigen::Map<const PlaneArray>;

  Tensor4() : shape_{0, 0, 0, 0} {}

  explicit Tensor4(const Shape4& shape, Scalar fill = Scalar(0))
      : shape_(checked(shape)), data_(Storage::Constant(shape.size(), fill)) {}

  Tensor4(const Shape4& shape, std::initializer_list<Scalar> values)
      : shape_(checked(shape)), data_(shape.size()) {
    if (static_cast<Index>(values.size()) != shape.size()) {
      throw ValidationError("tensor " + to_string(shape) + " needs " +
                            std::to_string(shape.size()) + " values, got " +
                            std::to_string(values.size()));
    }
    Index i = 0;
    for (Scalar v : values) data_[i++] = v;
  }

  template <typename Derived>
  Tensor4(const Shape4& shape, const Eigen::DenseBase<Derived>& values)
      : shape_(checked(shape)), data_(values) {
    if (data_.size() != shape.size()) {
      throw ValidationError("tensor " + to_string(shape) + " needs " +
                            std::to_string(shape.size()) + " values, got " +
                            std::to_string(data_.size()));
    }
  }

  const Shape4& shape() const { return shape_; }
  Index n() const { return shape_.n; }
  Index c() const { return shape_.c; }
  Index h() const { return shape_.h; }
  Index w() const { return shape_.w; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Index offset(Index b, Index ch, Index y, Index x) const {
    return ((b * shape_.c + ch) * shape_.h + y) * shape_.w + x;
  }
  Scalar& operator()(Index b, Index ch, Index y, Index x) {
    return data_[offset(b, ch, y, x)];
  }
  Scalar operator()(Index b, Index ch, Index y, Index x) const {
    return data_[offset(b, ch, y, x)];
  }

  PlaneMap plane(Index b, Index ch) {
    return PlaneMap(data_.data() + offset(b, ch, 0, 0), shape_.h, shape_.w);
  }
  ConstPlaneMap plane(Index b, Index ch) const {
    return ConstPlaneMap(data_.data() + offset(b, ch, 0, 0), shape_.h,
                         shape_.w);
  }

  // Planes (b, ch) flattened to a contiguous segment of length h*w.
  auto flat_plane(Index b, Index ch) {
    return data_.segment(offset(b, ch, 0, 0), shape_.plane_size());
  }
  auto flat_plane(Index b, Index ch) const {
    return data_.segment(offset(b, ch, 0, 0), shape_.plane_size());
  }

  template <typename NewScalar>
  Tensor4<NewScalar> cast() const {
    return Tensor4<NewScalar>(shape_, data_.template cast<NewScalar>());
  }

  bool all_finite() const { return data_.isFinite().all(); }

  bool operator==(const Tensor4& other) const {
    return shape_ == other.shape_ && (data_ == other.data_).all();
  }

 private:
  static const Shape4& checked(const Shape4& s) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
      throw ValidationError("tensor dimensions must be >= 1, got " +
                            to_string(s));
    }
    return s;
  }

  Shape4 shape_;
  Storage data_;
};

// Uniform [lo, hi) fill from a seeded engine. Used by initializers, gradient
// checks, and the synthetic dataset.
template <typename Scalar, typename Engine>
Tensor4<Scalar> random_uniform(const Shape4& shape, Engine& engine,
                               Scalar lo = Scalar(-1), Scalar hi = Scalar(1)) {
  Tensor4<Scalar> t(shape);
  std::uniform_real_distribution<double> dist(static_cast<double>(lo),
                                              static_cast<double>(hi));
  for (Index i = 0; i < t.size(); ++i) t.array()[i] = Scalar(dist(engine));
  return t;
}

// Channels [begin, begin + count) as a new tensor.
template <typename Scalar>
Tensor4<Scalar> slice_channels(const Tensor4<Scalar>& t, Index begin,
                               Index count) {
  if (begin < 0 || count < 1 || begin + count > t.c()) {
    throw ValidationError("channel slice [" + std::to_string(begin) + ", " +
                          std::to_string(begin + count) +
                          ") out of range for c=" + std::to_string(t.c()));
  }
  Tensor4<Scalar> out(Shape4{t.n(), count, t.h(), t.w()});
  for (Index b = 0; b < t.n(); ++b) {
    for (Index ch = 0; ch < count; ++ch) {
      out.flat_plane(b, ch) = t.flat_plane(b, begin + ch);
    }
  }
  return out;
}

// Writes `src` into channels [begin, begin + src.c()) of `dst`.
template <typename Scalar>
void assign_channels(Tensor4<Scalar>& dst, Index begin,
                     const Tensor4<Scalar>& src) {
  if (src.n() != dst.n() || src.h() != dst.h() || src.w() != dst.w() ||
      begin < 0 || begin + src.c() > dst.c()) {
    throw ValidationError("cannot place " + to_string(src.shape()) +
                          " at channel " + std::to_string(begin) + " of " +
                          to_string(dst.shape()));
  }
  for (Index b = 0; b < src.n(); ++b) {
    for (Index ch = 0; ch < src.c(); ++ch) {
      dst.flat_plane(b, begin + ch) = src.flat_plane(b, ch);
    }
  }
}

}  // namespace fasternam

#endif  // FASTERNAM_TENSOR_HPP_
