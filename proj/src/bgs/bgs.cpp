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

#include "fuselab/bgs.hpp"

#include "fuselab/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fuselab::bgs {

namespace {

void check_dims(const Frame& frame, std::size_t h, std::size_t w) {
    if(frame.height() != h || frame.width() != w)
        throw DataError("frame is " + std::to_string(frame.height()) + "x" + std::to_string(frame.width()) +
                        " but the model was built for " + std::to_string(h) + "x" + std::to_string(w));
}

void check_frame(const Frame& frame) {
    if(frame.empty())
        throw DataError("empty frame");
}

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Counter-based stream keyed by (seed, frame, pixel).
class PixelRng {
public:
    PixelRng(std::uint64_t seed, std::uint64_t frame, std::uint64_t pixel)
            : m_state(mix(mix(mix(seed) ^ frame) ^ pixel)) {}
    std::uint64_t next() { return mix(m_state++); }
    /// Uniform in [0, n) (multiply-shift, negligible bias for small n).
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(((next() >> 32) * static_cast<std::uint64_t>(n)) >> 32);
    }

private:
    std::uint64_t m_state;
};

constexpr int kNeighbours[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};

/// Random in-bounds 8-neighbour of (y, x); falls back to the pixel itself on a 1x1 frame.
std::size_t random_neighbour(PixelRng& rng, std::size_t y, std::size_t x, std::size_t h, std::size_t w) {
    if(h == 1 && w == 1)
        return 0;
    for(;;) {
        const auto& d = kNeighbours[rng.below(8)];
        const auto yy = static_cast<std::ptrdiff_t>(y) + d[0];
        const auto xx = static_cast<std::ptrdiff_t>(x) + d[1];
        if(yy >= 0 && xx >= 0 && yy < static_cast<std::ptrdiff_t>(h) && xx < static_cast<std::ptrdiff_t>(w))
            return static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx);
    }
}

}  // namespace

void GmmParams::validate() const {
    if(components < 1)
        throw ConfigError("gmm: components must be >= 1");
    if(!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("gmm: alpha must lie in (0, 1]");
    if(!(lambda > 0.0))
        throw ConfigError("gmm: lambda must be positive");
    if(!(bg_fraction > 0.0 && bg_fraction <= 1.0))
        throw ConfigError("gmm: background fraction must lie in (0, 1]");
    if(!(var_floor > 0.0) || !(var_init >= var_floor))
        throw ConfigError("gmm: need 0 < variance floor <= initial variance");
}

GmmModel::GmmModel(GmmParams params) : m_params(params) { m_params.validate(); }

std::vector<GmmModel::Component> GmmModel::components(std::size_t index) const {
    const std::size_t k = static_cast<std::size_t>(m_params.components);
    if(index >= m_active.size())
        throw std::out_of_range("pixel index out of range");
    return {m_comp.begin() + static_cast<std::ptrdiff_t>(index * k),
            m_comp.begin() + static_cast<std::ptrdiff_t>(index * k + m_active[index])};
}

Mask GmmModel::step(const Frame& frame) {
    check_frame(frame);
    const std::size_t k = static_cast<std::size_t>(m_params.components);
    Mask out(frame.height(), frame.width(), kBackground);
    if(!initialized()) {
        m_height = frame.height();
        m_width = frame.width();
        m_comp.assign(frame.size() * k, Component{0.0, 0.0, m_params.var_init});
        m_active.assign(frame.size(), 1);
        for(std::size_t i = 0; i < frame.size(); ++i)
            m_comp[i * k] = Component{1.0, static_cast<double>(frame[i]), m_params.var_init};
        return out;
    }
    check_dims(frame, m_height, m_width);
    const double alpha = m_params.alpha;
    const double lambda2 = m_params.lambda * m_params.lambda;
    for(std::size_t i = 0; i < frame.size(); ++i) {
        Component* c = &m_comp[i * k];
        std::size_t n = m_active[i];
        const double v = static_cast<double>(frame[i]);

        // background set: leading components until cumulative weight exceeds T
        std::size_t bg_count = n;
        double cum = 0.0;
        for(std::size_t j = 0; j < n; ++j) {
            cum += c[j].weight;
            if(cum > m_params.bg_fraction) {
                bg_count = j + 1;
                break;
            }
        }
        std::size_t matched = n;
        for(std::size_t j = 0; j < n; ++j) {
            const double d = v - c[j].mean;
            if(d * d < lambda2 * c[j].var) {
                matched = j;
                break;
            }
        }

        for(std::size_t j = 0; j < n; ++j)
            c[j].weight *= 1.0 - alpha;
        if(matched < n) {
            Component& m = c[matched];
            m.weight += alpha;
            const double rho = std::min(1.0, alpha / m.weight);
            const double d = v - m.mean;
            m.mean += rho * d;
            m.var = std::max(m_params.var_floor, m.var + rho * (d * d - m.var));
            if(matched >= bg_count)
                out[i] = kForeground;
        } else {
            if(n < k)
                ++n;
            c[n - 1] = Component{alpha, v, m_params.var_init};
            out[i] = kForeground;
        }
        m_active[i] = static_cast<std::uint8_t>(n);

        double total = 0.0;
        for(std::size_t j = 0; j < n; ++j)
            total += c[j].weight;
        for(std::size_t j = 0; j < n; ++j)
            c[j].weight /= total;
        // insertion sort by weight/sigma, stable
        for(std::size_t j = 1; j < n; ++j) {
            const Component key = c[j];
            const double r = key.weight / std::sqrt(key.var);
            std::size_t p = j;
            while(p > 0 && c[p - 1].weight / std::sqrt(c[p - 1].var) < r) {
                c[p] = c[p - 1];
                --p;
            }
            c[p] = key;
        }
    }
    return out;
}

void SampleConsensusParams::validate() const {
    if(samples < 1 || samples > 255)
        throw ConfigError("sc: samples must lie in [1, 255]");
    if(radius < 1)
        throw ConfigError("sc: radius must be >= 1");
    if(min_matches < 1 || min_matches > samples)
        throw ConfigError("sc: min_matches must lie in [1, samples]");
    if(subsampling < 1)
        throw ConfigError("sc: subsampling must be >= 1");
}

SampleConsensusModel::SampleConsensusModel(SampleConsensusParams params) : m_params(params) {
    m_params.validate();
}

void SampleConsensusModel::initialize(const Frame& frame) {
    check_frame(frame);
    m_height = frame.height();
    m_width = frame.width();
    m_frame = 0;
    const std::size_t s = static_cast<std::size_t>(m_params.samples);
    m_samples.assign(frame.size() * s, 0);
    for(std::size_t y = 0; y < m_height; ++y) {
        for(std::size_t x = 0; x < m_width; ++x) {
            const std::size_t i = y * m_width + x;
            PixelRng rng(m_params.seed, 0, i);
            for(std::size_t j = 0; j < s; ++j)
                m_samples[i * s + j] = frame[random_neighbour(rng, y, x, m_height, m_width)];
        }
    }
}

std::span<const std::uint8_t> SampleConsensusModel::samples(std::size_t index) const {
    const std::size_t s = static_cast<std::size_t>(m_params.samples);
    if(index * s >= m_samples.size())
        throw std::out_of_range("pixel index out of range");
    return std::span<const std::uint8_t>(m_samples).subspan(index * s, s);
}

Mask SampleConsensusModel::step(const Frame& frame) {
    if(!initialized())
        throw std::logic_error("sample-consensus model used before initialization");
    check_dims(frame, m_height, m_width);
    ++m_frame;
    const std::size_t s = static_cast<std::size_t>(m_params.samples);
    const auto phi = static_cast<std::uint32_t>(m_params.subsampling);
    Mask out(m_height, m_width, kBackground);

    // classify against the model as it stood before this frame
    for(std::size_t i = 0; i < frame.size(); ++i) {
        const int v = frame[i];
        const std::uint8_t* smp = &m_samples[i * s];
        int matches = 0;
        for(std::size_t j = 0; j < s && matches < m_params.min_matches; ++j)
            matches += std::abs(v - static_cast<int>(smp[j])) < m_params.radius;
        if(matches < m_params.min_matches)
            out[i] = kForeground;
    }
    for(std::size_t y = 0; y < m_height; ++y) {
        for(std::size_t x = 0; x < m_width; ++x) {
            const std::size_t i = y * m_width + x;
            if(out[i] == kForeground)
                continue;
            PixelRng rng(m_params.seed, m_frame, i);
            if(rng.below(phi) == 0)
                m_samples[i * s + rng.below(static_cast<std::uint32_t>(s))] = frame[i];
            if(rng.below(phi) == 0) {
                const std::size_t nb = random_neighbour(rng, y, x, m_height, m_width);
                m_samples[nb * s + rng.below(static_cast<std::uint32_t>(s))] = frame[i];
            }
        }
    }
    return out;
}

void MedianParams::validate() const {
    if(buffer < 1)
        throw ConfigError("median: buffer must be >= 1");
    if(threshold < 0)
        throw ConfigError("median: threshold must be >= 0");
}

MedianModel::MedianModel(MedianParams params) : m_params(params) { m_params.validate(); }

Mask MedianModel::step(const Frame& frame) {
    check_frame(frame);
    const std::size_t b = static_cast<std::size_t>(m_params.buffer);
    if(m_height == 0) {
        m_height = frame.height();
        m_width = frame.width();
        m_ring.assign(frame.size() * b, 0);
    }
    check_dims(frame, m_height, m_width);
    Mask out(m_height, m_width, kBackground);
    if(m_count > 0) {
        std::vector<std::uint8_t> tmp(m_count);
        const std::size_t mid = m_count / 2;
        for(std::size_t i = 0; i < frame.size(); ++i) {
            std::copy_n(&m_ring[i * b], m_count, tmp.begin());
            std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(mid), tmp.end());
            double median = tmp[mid];
            if(m_count % 2 == 0)
                median = 0.5 * (median + *std::max_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(mid)));
            if(std::abs(static_cast<double>(frame[i]) - median) > static_cast<double>(m_params.threshold))
                out[i] = kForeground;
        }
    }
    for(std::size_t i = 0; i < frame.size(); ++i)
        m_ring[i * b + m_head] = frame[i];
    m_head = (m_head + 1) % b;
    m_count = std::min(m_count + 1, b);
    return out;
}

std::unique_ptr<BackgroundModel> make_model(std::string_view algo, const BgsParams& params) {
    if(algo == "gmm")
        return std::make_unique<GmmModel>(params.gmm);
    if(algo == "sc")
        return std::make_unique<SampleConsensusModel>(params.sc);
    if(algo == "median")
        return std::make_unique<MedianModel>(params.median);
    throw ConfigError("unknown algorithm '" + std::string(algo) + "' (expected gmm, sc or median)");
}

std::vector<Mask> run_bgs(const std::vector<Frame>& frames, std::string_view algo, const BgsParams& params) {
    auto model = make_model(algo, params);
    if(frames.empty())
        throw DataError("cannot run background subtraction on an empty video");
    for(const auto& f : frames)
        if(f.empty() || !f.same_dims(frames.front()))
            throw DataError("video frames must be non-empty and share one size");
    if(auto* sc = dynamic_cast<SampleConsensusModel*>(model.get()))
        sc->initialize(frames.front());
    std::vector<Mask> masks;
    masks.reserve(frames.size());
    for(const auto& f : frames)
        masks.push_back(model->step(f));
    return masks;
}

}  // namespace fuselab::bgs
