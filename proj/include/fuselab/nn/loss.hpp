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
#include <span>
#include <vector>

namespace fuselab::nn {

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before the log.
inline constexpr double kProbClamp = 1e-7;

/// Channel 0 holds the background score/probability, channel 1 the foreground.
inline constexpr std::size_t kBackgroundChannel = 0;
inline constexpr std::size_t kForegroundChannel = 1;

template<typename T>
struct LossTerms {
    /// Mean over the batch of the per-sample class-balanced sums.
    double loss = 0.0;
    /// Per-sample beta = |Y-| / |Y| over non-ignored pixels.
    std::vector<double> beta;
    /// Gradient of `loss` with respect to the pre-softmax logits.
    Tensor<T> grad_logits;
};

/// Class-balanced cross entropy on a 2-channel softmax output.
///
/// For each sample the foreground term is weighted by beta (the background
/// fraction) and the background term by 1 - beta, both summed over pixels, so a
/// sample whose non-ignored labels are all one class contributes exactly zero.
/// `label` and `ignore` are laid out (n, h, w); label values must be 0 or 1 on
/// every pixel whose ignore value is 0. A sample without any evaluated pixel
/// gets beta = 1 and zero loss.
///
/// The returned gradient is the exact derivative of the clamped objective with
/// respect to the logits: w * (p - onehot) where the target probability lies
/// inside the clamp range, zero where it was clamped.
template<typename T>
LossTerms<T> balanced_ce_loss(const Tensor<T>& prob, std::span<const std::uint8_t> label,
                              std::span<const std::uint8_t> ignore);

/// beta for a single (h*w) label map; exposed for sample filtering.
double balanced_beta(std::span<const std::uint8_t> label, std::span<const std::uint8_t> ignore);

}  // namespace fuselab::nn
