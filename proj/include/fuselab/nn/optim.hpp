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

#include "fuselab/nn/params.hpp"

#include <cstdint>
#include <vector>

namespace fuselab::nn {

struct AdamHyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template<typename T>
struct AdamState {
    AdamHyper hyper;
    std::uint64_t t = 0;
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;

    AdamState() = default;
    AdamState(const ParamStore<T>& params, AdamHyper h) : hyper(h) {
        for(const auto& p : params) {
            m.emplace_back(p.value.shape());
            v.emplace_back(p.value.shape());
        }
    }
};

/// One bias-corrected Adam update over every parameter; increments state.t.
template<typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state);

/// Zero-mean normal samples with variance 2 / fan_in. A fan_in of 0 means
/// c * h * w of `shape` (the conv3x3 convention).
template<typename T>
Tensor<T> he_init(const Shape& shape, std::uint64_t seed, std::size_t fan_in = 0);

}  // namespace fuselab::nn
