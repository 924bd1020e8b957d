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

#include "fuselab/nn/optim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace fuselab::nn {

template<typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state) {
    if(state.m.size() != params.size() || state.v.size() != params.size())
        throw std::invalid_argument("adam_step: optimizer state does not match parameter count");
    for(std::size_t i = 0; i < params.size(); ++i) {
        const Shape& s = params[i].value.shape();
        if(state.m[i].shape() != s || state.v[i].shape() != s || params[i].grad.shape() != s)
            throw std::invalid_argument("adam_step: moment/parameter shape mismatch for '" + params[i].name + "'");
    }
    const AdamHyper& h = state.hyper;
    ++state.t;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
    const T b1 = static_cast<T>(h.beta1), b2 = static_cast<T>(h.beta2);
    const T inv_bc1 = static_cast<T>(1.0 / bc1), inv_bc2 = static_cast<T>(1.0 / bc2);
    const T lr = static_cast<T>(h.lr), eps = static_cast<T>(h.eps);
    for(std::size_t i = 0; i < params.size(); ++i) {
        T* p = params[i].value.raw();
        const T* g = params[i].grad.raw();
        T* m = state.m[i].raw();
        T* v = state.v[i].raw();
        const std::size_t count = params[i].value.size();
        for(std::size_t k = 0; k < count; ++k) {
            m[k] = b1 * m[k] + (T(1) - b1) * g[k];
            v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
            const T mhat = m[k] * inv_bc1;
            const T vhat = v[k] * inv_bc2;
            p[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template<typename T>
Tensor<T> he_init(const Shape& shape, std::uint64_t seed, std::size_t fan_in) {
    if(!shape.valid())
        throw std::invalid_argument("he_init: empty shape");
    if(fan_in == 0)
        fan_in = shape.c * shape.h * shape.w;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Tensor<T> out(shape);
    for(auto& x : out.data())
        x = static_cast<T>(dist(rng));
    return out;
}

template void adam_step<float>(ParamStore<float>&, AdamState<float>&);
template void adam_step<double>(ParamStore<double>&, AdamState<double>&);
template Tensor<float> he_init<float>(const Shape&, std::uint64_t, std::size_t);
template Tensor<double> he_init<double>(const Shape&, std::uint64_t, std::size_t);

}  // namespace fuselab::nn
