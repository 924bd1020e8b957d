// Copyright 2026 The fuselab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "fuselab/nn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace fuselab::nn {

using TensorList = std::vector<Tensor<double>>;

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t worst_input = 0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

/// Compares `gradient(inputs)` against central differences of the scalar
/// `objective` over every element of every input. Throws std::domain_error on
/// any non-finite objective or gradient value.
GradCheckResult grad_check(const std::function<double(const TensorList&)>& objective,
                           const std::function<TensorList(const TensorList&)>& gradient, TensorList inputs,
                           double eps = 1e-5);

/// Seeded uniform tensor in [lo, hi); used to build test inputs and the
/// random projection that turns a tensor-valued op into a scalar objective.
Tensor<double> uniform_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

/// sum(a * b) over all elements.
double dot(const Tensor<double>& a, const Tensor<double>& b);

}  // namespace fuselab::nn
