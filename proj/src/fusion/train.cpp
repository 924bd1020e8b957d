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

#include "fuselab/fusion/train.hpp"

#include "fuselab/error.hpp"
#include "fuselab/nn/layers.hpp"
#include "fuselab/nn/loss.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace fuselab::fusion {

void TrainConfig::validate() const {
    if(epochs < 1)
        throw ConfigError("epochs must be >= 1");
    if(batch < 1)
        throw ConfigError("batch size must be >= 1");
    if(!(adam.lr > 0.0))
        throw ConfigError("learning rate must be positive");
    if(!(min_fg_fraction >= 0.0 && min_fg_fraction <= 1.0))
        throw ConfigError("min foreground fraction must lie in [0,1]");
}

nn::Tensor<float> masks_to_input(const std::vector<Mask>& masks, std::size_t size) {
    if(masks.empty())
        throw DataError("no candidate masks given");
    for(std::size_t i = 0; i < masks.size(); ++i) {
        if(masks[i].empty())
            throw DataError("candidate mask " + std::to_string(i) + " is empty");
        if(!masks[i].same_dims(masks[0]))
            throw DataError("candidate mask " + std::to_string(i) + " dims differ from mask 0");
        if(!is_binary(masks[i]))
            throw DataError("candidate mask " + std::to_string(i) + " is not binary {0,255}");
    }
    nn::Tensor<float> input(nn::Shape{1, masks.size(), size, size});
    for(std::size_t c = 0; c < masks.size(); ++c) {
        const Mask resized = resize_mask_nn(masks[c], size, size);
        float* dst = input.plane(0, c);
        for(std::size_t i = 0; i < resized.size(); ++i)
            dst[i] = resized[i] ? 1.0f : 0.0f;
    }
    return input;
}

TrainingSample make_training_sample(const std::vector<Mask>& masks, const Mask& groundtruth, std::size_t size) {
    if(groundtruth.empty())
        throw DataError("ground truth mask is empty");
    TrainingSample s;
    s.input = masks_to_input(masks, size);
    const Mask gt = resize_mask_nn(groundtruth, size, size);
    s.label.resize(gt.size());
    s.ignore.resize(gt.size());
    for(std::size_t i = 0; i < gt.size(); ++i) {
        const std::uint8_t v = gt[i];
        s.ignore[i] = (v == gt::kOutsideRoi || v == gt::kUnknown) ? 1 : 0;
        s.label[i] = v == gt::kMotion ? 1 : 0;
    }
    return s;
}

namespace {

double foreground_fraction(const TrainingSample& s) {
    std::size_t pos = 0, tot = 0;
    for(std::size_t i = 0; i < s.label.size(); ++i) {
        if(s.ignore[i])
            continue;
        pos += s.label[i];
        ++tot;
    }
    return tot ? static_cast<double>(pos) / static_cast<double>(tot) : 0.0;
}

}  // namespace

TrainResult train(nn::ParamStore<float>& params, const NetConfig& config, const std::vector<TrainingSample>& samples,
                  const TrainConfig& tc, const EpochCallback& on_epoch) {
    config.validate();
    tc.validate();
    const std::size_t S = config.input_size;
    const nn::Shape expected{1, config.input_channels, S, S};
    TrainResult result;
    std::vector<std::size_t> usable;
    for(std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if(s.input.shape() != expected || s.label.size() != S * S || s.ignore.size() != S * S)
            throw DataError("training sample " + std::to_string(i) + " does not match the network input " +
                            nn::to_string(expected));
        const double beta = nn::balanced_beta(s.label, s.ignore);
        if(beta <= 0.0 || beta >= 1.0 || foreground_fraction(s) < tc.min_fg_fraction) {
            ++result.skipped_samples;
            continue;
        }
        usable.push_back(i);
    }
    if(usable.empty())
        throw DataError("no usable training samples (" + std::to_string(samples.size()) +
                        " given, all empty or single-class)");
    result.used_samples = usable.size();

    nn::AdamState<float> adam(params, tc.adam);
    std::mt19937_64 rng(tc.seed);
    const std::size_t P = S * S;
    for(std::uint32_t epoch = 0; epoch < tc.epochs; ++epoch) {
        std::shuffle(usable.begin(), usable.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for(std::size_t start = 0; start < usable.size(); start += tc.batch) {
            const std::size_t count = std::min<std::size_t>(tc.batch, usable.size() - start);
            nn::Tensor<float> input(nn::Shape{count, config.input_channels, S, S});
            std::vector<std::uint8_t> label(count * P), ignore(count * P);
            for(std::size_t b = 0; b < count; ++b) {
                const auto& s = samples[usable[start + b]];
                std::copy(s.input.data().begin(), s.input.data().end(), input.plane(b, 0));
                std::copy(s.label.begin(), s.label.end(), label.begin() + b * P);
                std::copy(s.ignore.begin(), s.ignore.end(), ignore.begin() + b * P);
            }
            ForwardTrace<float> trace;
            const nn::Tensor<float> logits = forward_logits(params, config, input, &trace);
            const nn::Tensor<float> prob = nn::softmax_channels(logits);
            const auto terms = nn::balanced_ce_loss(prob, label, ignore);
            params.zero_grad();
            backward(params, config, trace, terms.grad_logits);
            nn::adam_step(params, adam);
            loss_sum += terms.loss;
            ++batches;
        }
        const double mean = loss_sum / static_cast<double>(batches);
        result.loss_history.push_back(mean);
        if(on_epoch && !on_epoch(epoch, mean))
            break;
    }
    return result;
}

Mask probabilities_to_mask(const nn::Tensor<float>& prob) {
    const nn::Shape& ps = prob.shape();
    if(ps.n != 1 || ps.c != 2)
        throw std::invalid_argument("probabilities_to_mask: expected a (1,2,h,w) map, got " + nn::to_string(ps));
    Mask out(ps.h, ps.w);
    const float* pb = prob.plane(0, nn::kBackgroundChannel);
    const float* pf = prob.plane(0, nn::kForegroundChannel);
    for(std::size_t i = 0; i < out.size(); ++i)
        out[i] = pf[i] > pb[i] ? kForeground : kBackground;
    return out;
}

Mask predict_mask(const nn::ParamStore<float>& params, const NetConfig& config, const std::vector<Mask>& masks,
                  std::size_t out_height, std::size_t out_width) {
    if(masks.size() != config.input_channels)
        throw DataError("network expects " + std::to_string(config.input_channels) + " candidate masks, got " +
                        std::to_string(masks.size()));
    const nn::Tensor<float> input = masks_to_input(masks, config.input_size);
    const Mask small = probabilities_to_mask(forward(params, config, input));
    return resize_mask_nn(small, out_height, out_width);
}

}  // namespace fuselab::fusion
