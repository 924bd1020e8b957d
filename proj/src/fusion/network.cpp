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

#include "fuselab/fusion/network.hpp"

#include "fuselab/error.hpp"
#include "fuselab/nn/layers.hpp"
#include "fuselab/nn/optim.hpp"

#include <string>

namespace fuselab::fusion {

namespace {

std::string enc_name(std::size_t stage, std::size_t conv) {
    return "enc" + std::to_string(stage + 1) + ".conv" + std::to_string(conv + 1);
}
std::string up_name(std::size_t stage) { return "dec" + std::to_string(stage + 1) + ".up"; }
std::string dec_name(std::size_t stage) { return "dec" + std::to_string(stage + 1) + ".conv"; }
const std::string kHead = "head";

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template<typename T>
std::span<const T> bias_of(const nn::ParamStore<T>& params, const std::string& layer) {
    return params.at(layer + ".bias").value.data();
}

template<typename T>
const nn::Tensor<T>& weight_of(const nn::ParamStore<T>& params, const std::string& layer) {
    return params.at(layer + ".weight").value;
}

template<typename T>
void accumulate(nn::ParamStore<T>& params, const std::string& layer, const nn::ConvGrads<T>& g) {
    auto& w = params.at(layer + ".weight").grad;
    for(std::size_t i = 0; i < w.size(); ++i)
        w[i] += g.dw[i];
    auto& b = params.at(layer + ".bias").grad;
    for(std::size_t i = 0; i < b.size(); ++i)
        b[i] += g.db[i];
}

template<typename T>
void add_inplace(nn::Tensor<T>& dst, const nn::Tensor<T>& src) {
    for(std::size_t i = 0; i < dst.size(); ++i)
        dst[i] += src[i];
}

}  // namespace

NetConfig NetConfig::paper_scale(std::uint32_t inputs) {
    NetConfig c;
    c.input_channels = inputs;
    c.stage_channels = {64, 128, 256, 512, 512};
    c.convs_per_stage = {2, 2, 3, 3, 3};
    c.input_size = 224;
    return c;
}

NetConfig NetConfig::tiny(std::uint32_t inputs, std::uint32_t size) {
    NetConfig c;
    c.input_channels = inputs;
    c.stage_channels = {8, 16, 32, 32, 32};
    c.convs_per_stage = {2, 2, 2, 2, 2};
    c.input_size = size;
    return c;
}

void NetConfig::validate() const {
    if(input_channels < 1)
        throw ConfigError("network needs at least one input mask channel");
    for(std::size_t s = 0; s < kStages; ++s) {
        if(stage_channels[s] < 1)
            throw ConfigError("stage " + std::to_string(s + 1) + " width must be >= 1");
        if(convs_per_stage[s] < 1)
            throw ConfigError("stage " + std::to_string(s + 1) + " needs at least one convolution");
    }
    if(input_size == 0 || input_size % 32 != 0)
        throw ConfigError("input size " + std::to_string(input_size) + " is not a positive multiple of 32");
}

template<typename T>
nn::ParamStore<T> build_network(const NetConfig& config, std::uint64_t seed) {
    config.validate();
    nn::ParamStore<T> params;
    std::uint64_t counter = 0;
    auto add_layer = [&](const std::string& name, const nn::Shape& wshape, std::size_t bias_len,
                         std::size_t fan_in) {
        params.add(name + ".weight", nn::he_init<T>(wshape, splitmix64(seed ^ splitmix64(++counter)), fan_in), 4);
        params.add(name + ".bias", nn::Tensor<T>(nn::Shape{bias_len, 1, 1, 1}), 1);
    };
    const auto& C = config.stage_channels;
    std::size_t cin = config.input_channels;
    for(std::size_t s = 0; s < kStages; ++s) {
        for(std::size_t k = 0; k < config.convs_per_stage[s]; ++k) {
            add_layer(enc_name(s, k), nn::Shape{C[s], cin, 3, 3}, C[s], 0);
            cin = C[s];
        }
    }
    for(std::size_t s = kStages; s-- > 0;) {
        const std::size_t in_ch = (s + 1 == kStages) ? C[kStages - 1] : C[s + 1];
        add_layer(up_name(s), nn::Shape{in_ch, C[s], 2, 2}, C[s], in_ch);
        add_layer(dec_name(s), nn::Shape{C[s], 2 * std::size_t{C[s]}, 3, 3}, C[s], 0);
    }
    add_layer(kHead, nn::Shape{2, C[0], 3, 3}, 2, 0);
    return params;
}

template<typename T>
nn::Tensor<T> forward_logits(const nn::ParamStore<T>& params, const NetConfig& config, const nn::Tensor<T>& input,
                             ForwardTrace<T>* trace) {
    config.validate();
    const nn::Shape& is = input.shape();
    if(is.c != config.input_channels || is.h != config.input_size || is.w != config.input_size)
        throw std::invalid_argument("fusion forward: input " + nn::to_string(is) + " does not match config (" +
                                    std::to_string(config.input_channels) + " channels, " +
                                    std::to_string(config.input_size) + "px)");
    nn::Tensor<T> h = input;
    std::array<nn::Tensor<T>, kStages> skips;
    for(std::size_t s = 0; s < kStages; ++s) {
        for(std::size_t k = 0; k < config.convs_per_stage[s]; ++k) {
            const std::string layer = enc_name(s, k);
            nn::Tensor<T> pre = nn::conv3x3(h, weight_of(params, layer), bias_of(params, layer));
            nn::Tensor<T> act = nn::relu(pre);
            if(trace) {
                trace->encoder[s].conv_inputs.push_back(std::move(h));
                trace->encoder[s].pre_activations.push_back(std::move(pre));
            }
            h = std::move(act);
        }
        nn::Tensor<T> pooled = nn::maxpool2(h);
        skips[s] = std::move(h);
        h = std::move(pooled);
    }
    if(trace)
        trace->bottleneck = h;
    for(std::size_t s = kStages; s-- > 0;) {
        nn::Tensor<T> up = nn::deconv2(h, weight_of(params, up_name(s)), bias_of(params, up_name(s)));
        nn::Tensor<T> cat = nn::concat_channels(up, skips[s]);
        nn::Tensor<T> pre = nn::conv3x3(cat, weight_of(params, dec_name(s)), bias_of(params, dec_name(s)));
        nn::Tensor<T> act = nn::relu(pre);
        if(trace) {
            trace->deconv_inputs[s] = std::move(h);
            trace->concat_outputs[s] = std::move(cat);
            trace->decoder_pre_activations[s] = std::move(pre);
            trace->decoder_outputs[s] = act;
        }
        h = std::move(act);
    }
    nn::Tensor<T> logits = nn::conv3x3(h, weight_of(params, kHead), bias_of(params, kHead));
    if(trace) {
        trace->head_input = std::move(h);
        trace->skips = std::move(skips);
    }
    return logits;
}

template<typename T>
nn::Tensor<T> forward(const nn::ParamStore<T>& params, const NetConfig& config, const nn::Tensor<T>& input) {
    return nn::softmax_channels(forward_logits<T>(params, config, input, nullptr));
}

template<typename T>
void backward(nn::ParamStore<T>& params, const NetConfig& config, const ForwardTrace<T>& trace,
              const nn::Tensor<T>& grad_logits) {
    auto head = nn::conv3x3_backward(trace.head_input, weight_of(params, kHead), grad_logits);
    accumulate(params, kHead, head);
    nn::Tensor<T> g = std::move(head.dx);

    std::array<nn::Tensor<T>, kStages> skip_grads;
    for(std::size_t s = 0; s < kStages; ++s) {
        g = nn::relu_backward(trace.decoder_pre_activations[s], g);
        auto conv = nn::conv3x3_backward(trace.concat_outputs[s], weight_of(params, dec_name(s)), g);
        accumulate(params, dec_name(s), conv);
        auto [dup, dskip] = nn::split_channels(conv.dx, config.stage_channels[s]);
        skip_grads[s] = std::move(dskip);
        auto up = nn::deconv2_backward(trace.deconv_inputs[s], weight_of(params, up_name(s)), dup);
        accumulate(params, up_name(s), up);
        g = std::move(up.dx);
    }

    for(std::size_t s = kStages; s-- > 0;) {
        g = nn::maxpool2_backward(trace.skips[s], g);
        add_inplace(g, skip_grads[s]);
        for(std::size_t k = config.convs_per_stage[s]; k-- > 0;) {
            g = nn::relu_backward(trace.encoder[s].pre_activations[k], g);
            auto conv = nn::conv3x3_backward(trace.encoder[s].conv_inputs[k], weight_of(params, enc_name(s, k)), g);
            accumulate(params, enc_name(s, k), conv);
            g = std::move(conv.dx);
        }
    }
}

std::size_t import_encoder(nn::ParamStore<float>& params, const nn::ParamStore<float>& source) {
    std::size_t copied = 0;
    for(auto& p : params) {
        if(p.name.rfind("enc", 0) != 0)
            continue;
        const auto* src = source.find(p.name);
        if(!src)
            continue;
        if(src->value.shape() != p.value.shape())
            throw ConfigError("encoder import: '" + p.name + "' has shape " + nn::to_string(src->value.shape()) +
                              " in source but " + nn::to_string(p.value.shape()) + " in target");
        p.value = src->value;
        ++copied;
    }
    if(copied == 0)
        throw ConfigError("encoder import: source checkpoint holds no matching encoder parameters");
    return copied;
}

template nn::ParamStore<float> build_network<float>(const NetConfig&, std::uint64_t);
template nn::ParamStore<double> build_network<double>(const NetConfig&, std::uint64_t);
template nn::Tensor<float> forward_logits<float>(const nn::ParamStore<float>&, const NetConfig&,
                                                 const nn::Tensor<float>&, ForwardTrace<float>*);
template nn::Tensor<double> forward_logits<double>(const nn::ParamStore<double>&, const NetConfig&,
                                                   const nn::Tensor<double>&, ForwardTrace<double>*);
template nn::Tensor<float> forward<float>(const nn::ParamStore<float>&, const NetConfig&, const nn::Tensor<float>&);
template nn::Tensor<double> forward<double>(const nn::ParamStore<double>&, const NetConfig&,
                                            const nn::Tensor<double>&);
template void backward<float>(nn::ParamStore<float>&, const NetConfig&, const ForwardTrace<float>&,
                              const nn::Tensor<float>&);
template void backward<double>(nn::ParamStore<double>&, const NetConfig&, const ForwardTrace<double>&,
                               const nn::Tensor<double>&);

}  // namespace fuselab::fusion
