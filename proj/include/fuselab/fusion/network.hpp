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
#include "fuselab/nn/tensor.hpp"

#include <array>
#include <cstdint>
#include <vector>

// Encoder-decoder fusion network.
//
// Encoder: five stages, each a run of 3x3 conv + ReLU layers followed by a 2x2
// max-pool. Decoder: five repetitions (deepest first) of a stride-2 transposed
// conv that doubles the spatial size and maps to the matching encoder stage's
// width, concatenation with that stage's pre-pool feature map, and a 3x3 conv +
// ReLU back down to the stage width. Head: 3x3 conv to two channels (0 =
// background, 1 = foreground) followed by a channel softmax.

namespace fuselab::fusion {

inline constexpr std::size_t kStages = 5;

struct NetConfig {
    std::uint32_t input_channels = 3;
    std::array<std::uint32_t, kStages> stage_channels{8, 16, 32, 32, 32};
    std::array<std::uint32_t, kStages> convs_per_stage{2, 2, 2, 2, 2};
    std::uint32_t input_size = 224;

    /// VGG16-sized encoder (13 conv layers) at 224x224.
    static NetConfig paper_scale(std::uint32_t inputs = 3);
    /// Small widths for desk-scale training.
    static NetConfig tiny(std::uint32_t inputs = 3, std::uint32_t size = 32);

    /// Throws ConfigError unless every width/count is >= 1 and input_size is a positive multiple of 32.
    void validate() const;
    std::uint32_t bottleneck_size() const { return input_size >> kStages; }

    friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Activations kept by a training forward pass.
template<typename T>
struct ForwardTrace {
    struct Stage {
        std::vector<nn::Tensor<T>> conv_inputs;
        std::vector<nn::Tensor<T>> pre_activations;
    };
    std::array<Stage, kStages> encoder;
    /// Pre-pool output of each encoder stage; the skip connection source.
    std::array<nn::Tensor<T>, kStages> skips;
    nn::Tensor<T> bottleneck;
    std::array<nn::Tensor<T>, kStages> deconv_inputs;
    std::array<nn::Tensor<T>, kStages> concat_outputs;
    std::array<nn::Tensor<T>, kStages> decoder_pre_activations;
    /// Post-ReLU output of each decoder stage; same size as the matching skip.
    std::array<nn::Tensor<T>, kStages> decoder_outputs;
    nn::Tensor<T> head_input;
};

/// Creates every parameter in build order. Kernels are He-initialized from
/// per-parameter seeds derived from `seed`; biases start at zero.
template<typename T = float>
nn::ParamStore<T> build_network(const NetConfig& config, std::uint64_t seed);

/// Pre-softmax scores (n, 2, s, s). Fills `trace` when given.
template<typename T>
nn::Tensor<T> forward_logits(const nn::ParamStore<T>& params, const NetConfig& config, const nn::Tensor<T>& input,
                             ForwardTrace<T>* trace = nullptr);

/// Per-pixel (background, foreground) probabilities (n, 2, s, s).
template<typename T>
nn::Tensor<T> forward(const nn::ParamStore<T>& params, const NetConfig& config, const nn::Tensor<T>& input);

/// Accumulates d(objective)/d(param) into the gradient buffers given the
/// gradient with respect to the logits of the traced pass.
template<typename T>
void backward(nn::ParamStore<T>& params, const NetConfig& config, const ForwardTrace<T>& trace,
              const nn::Tensor<T>& grad_logits);

/// Copies every encoder parameter from `source` (matched by name) into
/// `params`. Returns the number of tensors copied; throws ConfigError on a
/// shape mismatch or when nothing matches.
std::size_t import_encoder(nn::ParamStore<float>& params, const nn::ParamStore<float>& source);

}  // namespace fuselab::fusion
