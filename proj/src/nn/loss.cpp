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

#include "fuselab/nn/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fuselab::nn {

double balanced_beta(std::span<const std::uint8_t> label, std::span<const std::uint8_t> ignore) {
    if(label.size() != ignore.size())
        throw std::invalid_argument("balanced_beta: label/ignore size mismatch");
    std::size_t pos = 0, tot = 0;
    for(std::size_t i = 0; i < label.size(); ++i) {
        if(ignore[i])
            continue;
        if(label[i] > 1)
            throw std::invalid_argument("balanced_beta: label value " + std::to_string(label[i]) +
                                        " outside {0,1} at pixel " + std::to_string(i));
        pos += label[i];
        ++tot;
    }
    if(tot == 0)
        return 1.0;
    return static_cast<double>(tot - pos) / static_cast<double>(tot);
}

template<typename T>
LossTerms<T> balanced_ce_loss(const Tensor<T>& prob, std::span<const std::uint8_t> label,
                              std::span<const std::uint8_t> ignore) {
    const Shape& ps = prob.shape();
    if(ps.c != 2)
        throw std::invalid_argument("balanced_ce_loss: expected 2-channel probabilities");
    const std::size_t P = ps.plane();
    if(label.size() != ps.n * P || ignore.size() != ps.n * P)
        throw std::invalid_argument("balanced_ce_loss: label/ignore size " + std::to_string(label.size()) +
                                    " does not match probability map " + to_string(ps));
    LossTerms<T> terms;
    terms.grad_logits = Tensor<T>(ps);
    terms.beta.reserve(ps.n);
    const double lo = kProbClamp, hi = 1.0 - kProbClamp;
    const double inv_batch = 1.0 / static_cast<double>(ps.n);
    double total = 0.0;
    for(std::size_t n = 0; n < ps.n; ++n) {
        const auto lab = label.subspan(n * P, P);
        const auto ign = ignore.subspan(n * P, P);
        const double beta = balanced_beta(lab, ign);
        terms.beta.push_back(beta);
        const T* pb = prob.plane(n, kBackgroundChannel);
        const T* pf = prob.plane(n, kForegroundChannel);
        T* gb = terms.grad_logits.plane(n, kBackgroundChannel);
        T* gf = terms.grad_logits.plane(n, kForegroundChannel);
        double sample = 0.0;
        for(std::size_t i = 0; i < P; ++i) {
            if(ign[i])
                continue;
            const bool fg = lab[i] != 0;
            const double weight = fg ? beta : 1.0 - beta;
            if(weight == 0.0)
                continue;
            const double p_target = static_cast<double>(fg ? pf[i] : pb[i]);
            const double clamped = std::min(std::max(p_target, lo), hi);
            sample -= weight * std::log(clamped);
            if(p_target > lo && p_target < hi) {
                const double scale = weight * inv_batch;
                gf[i] = static_cast<T>(scale * (static_cast<double>(pf[i]) - (fg ? 1.0 : 0.0)));
                gb[i] = static_cast<T>(scale * (static_cast<double>(pb[i]) - (fg ? 0.0 : 1.0)));
            }
        }
        total += sample;
    }
    terms.loss = total * inv_batch;
    return terms;
}

template LossTerms<float> balanced_ce_loss<float>(const Tensor<float>&, std::span<const std::uint8_t>,
                                                  std::span<const std::uint8_t>);
template LossTerms<double> balanced_ce_loss<double>(const Tensor<double>&, std::span<const std::uint8_t>,
                                                    std::span<const std::uint8_t>);

}  // namespace fuselab::nn
