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

#include <span>
#include <utility>
#include <vector>

// Forward/backward pairs for the fixed layer set of the fusion network. Every
// backward takes the forward input(s) plus the upstream gradient and returns
// gradients for all differentiable arguments; nothing is cached between calls.
//
// Weight layouts:
//   conv3x3  w: (cout, cin, 3, 3), padding 1, stride 1
//   deconv2  w: (cin, cout, 2, 2), stride 2, each input pixel paints one 2x2 block

namespace fuselab::nn {

template<typename T>
struct ConvGrads {
    Tensor<T> dx;
    Tensor<T> dw;
    std::vector<T> db;
};

template<typename T>
Tensor<T> conv3x3(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> b);
template<typename T>
ConvGrads<T> conv3x3_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy);

template<typename T>
Tensor<T> relu(const Tensor<T>& x);
/// Gradient flows where the forward input was strictly positive.
template<typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy);

template<typename T>
Tensor<T> maxpool2(const Tensor<T>& x);
/// Routes each window's gradient to its first maximum in scan order.
template<typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& x, const Tensor<T>& dy);

template<typename T>
Tensor<T> deconv2(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> b);
template<typename T>
ConvGrads<T> deconv2_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy);

template<typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
/// Inverse of concat_channels: first `channels_a` channels go to the first result.
template<typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::size_t channels_a);

/// Two-class softmax over the channel axis, max-subtracted.
template<typename T>
Tensor<T> softmax_channels(const Tensor<T>& x);
template<typename T>
Tensor<T> softmax_channels_backward(const Tensor<T>& prob, const Tensor<T>& dprob);

}  // namespace fuselab::nn
