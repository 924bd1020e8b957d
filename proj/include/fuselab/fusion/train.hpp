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

#include "fuselab/fusion/network.hpp"
#include "fuselab/image.hpp"
#include "fuselab/nn/optim.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace fuselab::fusion {

struct TrainConfig {
    std::uint32_t epochs = 50;
    std::uint32_t batch = 4;
    nn::AdamHyper adam{};
    std::uint64_t seed = 42;
    /// Samples whose non-ignored foreground fraction is below this are skipped
    /// (single-class samples are always skipped).
    double min_fg_fraction = 0.0;

    void validate() const;
};

/// One network input (1, N, s, s) in {0,1} with its {0,1} label and ignore map (s*s each).
struct TrainingSample {
    nn::Tensor<float> input;
    std::vector<std::uint8_t> label;
    std::vector<std::uint8_t> ignore;
};

/// Resizes each candidate mask to size x size (nearest neighbour), scales 255 -> 1 and
/// stacks them along channels. Throws DataError on an empty list, empty or
/// non-binary masks, or masks of differing dims.
nn::Tensor<float> masks_to_input(const std::vector<Mask>& masks, std::size_t size);

/// Builds a sample from candidate masks and a CDnet-encoded ground truth:
/// 255 -> foreground, 0/50 -> background, 85/170 -> ignored.
TrainingSample make_training_sample(const std::vector<Mask>& masks, const Mask& groundtruth, std::size_t size);

struct TrainResult {
    /// Mean batch loss per epoch.
    std::vector<double> loss_history;
    std::size_t used_samples = 0;
    std::size_t skipped_samples = 0;
};

/// Called after every epoch; returning false stops training early.
using EpochCallback = std::function<bool(std::uint32_t epoch, double mean_loss)>;

/// Adam training over the usable samples, reshuffled every epoch from a
/// generator seeded with `tc.seed`. Single-threaded and bitwise reproducible.
/// Throws DataError when no usable sample remains after filtering.
TrainResult train(nn::ParamStore<float>& params, const NetConfig& config, const std::vector<TrainingSample>& samples,
                  const TrainConfig& tc, const EpochCallback& on_epoch = {});

/// Argmax binarization of a (1, 2, h, w) probability map: foreground iff
/// P(fg) > P(bg); ties go to background.
Mask probabilities_to_mask(const nn::Tensor<float>& prob);

/// Full inference path: resize to the network size, forward, argmax, resize
/// back to (out_height, out_width). Output is strictly {0,255}.
Mask predict_mask(const nn::ParamStore<float>& params, const NetConfig& config, const std::vector<Mask>& masks,
                  std::size_t out_height, std::size_t out_width);

}  // namespace fuselab::fusion
