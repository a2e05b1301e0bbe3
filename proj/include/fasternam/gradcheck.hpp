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

// Central finite-difference verification of analytic backward passes.

#ifndef FASTERNAM_GRADCHECK_HPP_
#define FASTERNAM_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fasternam/error.hpp"
#include "fasternam/ops.hpp"
#include "fasternam/tensor.hpp"

namespace fasternam {

// A named, trainable parameter: its values and the gradient accumulator
// filled by the owning unit's backward pass.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

// Stateful forward/backward unit in 64-bit precision. `backward` consumes
// the cache left by the most recent `forward`, returns the input gradient,
// and accumulates parameter gradients.
template <typename U>
concept DifferentiableUnit = requires(U u, const Tensor4<double>& x, Mode m) {
  { u.forward(x, m) } -> std::convertible_to<Tensor4<double>>;
  { u.backward(x) } -> std::convertible_to<Tensor4<double>>;
  { u.parameters() } -> std::convertible_to<std::vector<ParamRef>>;
  u.zero_grad();
};

struct GradReport {
  std::string unit_name;
  double max_rel_error = 0.0;
  std::int64_t param_count_checked = 0;
  bool passed = false;
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // Per tensor (input or parameter), at most this many coordinates are
  // probed; larger tensors are sampled with the seeded engine.
  std::int64_t max_checks_per_tensor = 400;
  Mode mode = Mode::kTrain;
};

namespace detail {

// |a - n| / max(|a|, |n|), or the absolute difference when both are tiny.
inline double grad_error(double analytic, double numeric) {
  const double denom = std::max(std::abs(analytic), std::abs(numeric));
  const double diff = std::abs(analytic - numeric);
  return denom < 1e-8 ? diff : diff / denom;
}

inline std::vector<std::int64_t> probe_indices(std::int64_t size,
                                               std::int64_t limit,
                                               std::mt19937_64& rng) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(size));
  std::iota(idx.begin(), idx.end(), 0);
  if (size > limit) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(limit));
  }
  return idx;
}

inline void require_finite(double v, const std::string& where) {
  if (!std::isfinite(v)) throw NumericalError("non-finite value at " + where);
}

}  // namespace detail

// Checks d(sum(out * R))/d(theta) for the input and every parameter, where R
// is a seeded random projection. The unit's parameters are restored.
template <DifferentiableUnit Unit>
GradReport gradcheck(Unit& unit, const std::string& unit_name,
                     const Shape4& input_shape, std::uint64_t seed,
                     const GradCheckOptions& options = {}) {
  if (!(options.tolerance > 0.0)) {
    throw ValidationError("gradcheck tolerance must be positive");
  }
  std::mt19937_64 rng(seed);
  Tensor4<double> x = random_uniform<double>(input_shape, rng);
  const Tensor4<double> probe_out = unit.forward(x, options.mode);
  const Tensor4<double> projection =
      random_uniform<double>(probe_out.shape(), rng);

  auto loss = [&](const std::string& where) {
    const Tensor4<double> out = unit.forward(x, options.mode);
    if (!out.all_finite()) {
      throw NumericalError("non-finite forward output at " + where);
    }
    return (out.array() * projection.array()).sum();
  };

  unit.zero_grad();
  unit.forward(x, options.mode);
  const Tensor4<double> grad_x = unit.backward(projection);
  if (!grad_x.all_finite()) {
    throw NumericalError("non-finite input gradient in " + unit_name);
  }
  std::vector<ParamRef> params = unit.parameters();
  // Snapshot analytic gradients before the probes overwrite unit caches.
  std::vector<std::vector<double>> analytic;
  for (const ParamRef& p : params) analytic.emplace_back(p.grad.begin(), p.grad.end());

  GradReport report{unit_name, 0.0, 0, true};
  const double h = options.step;

  auto probe = [&](double& slot, double analytic_value, const std::string& where) {
    detail::require_finite(analytic_value, where);
    const double saved = slot;
    slot = saved + h;
    const double plus = loss(where);
    slot = saved - h;
    const double minus = loss(where);
    slot = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    report.max_rel_error =
        std::max(report.max_rel_error, detail::grad_error(analytic_value, numeric));
    ++report.param_count_checked;
  };

  for (std::int64_t i :
       detail::probe_indices(x.size(), options.max_checks_per_tensor, rng)) {
    probe(x.array()[i], grad_x.array()[i],
          unit_name + " input[" + std::to_string(i) + "]");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto count = static_cast<std::int64_t>(params[p].value.size());
    for (std::int64_t i :
         detail::probe_indices(count, options.max_checks_per_tensor, rng)) {
      probe(params[p].value[static_cast<std::size_t>(i)],
            analytic[p][static_cast<std::size_t>(i)],
            unit_name + " " + params[p].name + "[" + std::to_string(i) + "]");
    }
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace fasternam

#endif  // FASTERNAM_GRADCHECK_HPP_
