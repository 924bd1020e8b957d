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

#include "fuselab/image.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace fuselab::bgs {

/// Common interface of the per-pixel background models. `step` classifies a
/// grayscale frame and then updates the model with it.
class BackgroundModel {
public:
    virtual ~BackgroundModel() = default;
    virtual Mask step(const Frame& frame) = 0;
};

struct GmmParams {
    int components = 5;
    double alpha = 0.01;       // learning rate
    double lambda = 2.5;       // match threshold in standard deviations
    double bg_fraction = 0.7;  // T
    double var_floor = 4.0;
    double var_init = 225.0;   // variance of a freshly created component

    void validate() const;
};

/// Adaptive mixture of Gaussians per pixel. The first frame seeds one
/// component per pixel (weight 1) and is classified as background.
class GmmModel final : public BackgroundModel {
public:
    struct Component {
        double weight;
        double mean;
        double var;
    };

    explicit GmmModel(GmmParams params = {});
    Mask step(const Frame& frame) override;

    bool initialized() const { return m_height > 0; }
    /// Active components of pixel `index`, sorted by weight/sigma descending.
    std::vector<Component> components(std::size_t index) const;
    const GmmParams& params() const { return m_params; }

private:
    GmmParams m_params;
    std::size_t m_height = 0;
    std::size_t m_width = 0;
    std::vector<Component> m_comp;  // components() slots per pixel
    std::vector<std::uint8_t> m_active;
};

struct SampleConsensusParams {
    int samples = 20;      // S
    int radius = 20;       // R
    int min_matches = 2;   // #min
    int subsampling = 16;  // phi
    std::uint64_t seed = 42;

    void validate() const;
};

/// Sample-consensus model: background iff at least #min stored samples lie
/// within R of the pixel value. Random draws depend only on (seed, frame,
/// pixel), never on scan order.
class SampleConsensusModel final : public BackgroundModel {
public:
    explicit SampleConsensusModel(SampleConsensusParams params = {});

    /// Fills every pixel's S samples from its 8-neighbourhood (clipped at borders).
    void initialize(const Frame& frame);
    bool initialized() const { return m_height > 0; }
    /// Throws std::logic_error when called before initialize().
    Mask step(const Frame& frame) override;

    std::span<const std::uint8_t> samples(std::size_t index) const;
    const SampleConsensusParams& params() const { return m_params; }

private:
    SampleConsensusParams m_params;
    std::size_t m_height = 0;
    std::size_t m_width = 0;
    std::uint64_t m_frame = 0;
    std::vector<std::uint8_t> m_samples;
};

struct MedianParams {
    int buffer = 51;     // B
    int threshold = 30;  // tau

    void validate() const;
};

/// Foreground iff |v - median(last B values)| > tau; the buffer absorbs v
/// afterwards. An even-length buffer uses the mean of its two middle values.
/// The first frame (empty buffer) is all background.
class MedianModel final : public BackgroundModel {
public:
    explicit MedianModel(MedianParams params = {});
    Mask step(const Frame& frame) override;

    std::size_t buffered() const { return m_count; }
    const MedianParams& params() const { return m_params; }

private:
    MedianParams m_params;
    std::size_t m_height = 0;
    std::size_t m_width = 0;
    std::size_t m_count = 0;
    std::size_t m_head = 0;
    std::vector<std::uint8_t> m_ring;  // buffer slots per pixel
};

struct BgsParams {
    GmmParams gmm;
    SampleConsensusParams sc;
    MedianParams median;
};

/// "gmm", "sc" or "median"; throws ConfigError for any other name.
std::unique_ptr<BackgroundModel> make_model(std::string_view algo, const BgsParams& params);

/// One mask per frame. The sample-consensus model is initialized from frame 0.
/// Throws DataError for an empty video or frames of differing dims.
std::vector<Mask> run_bgs(const std::vector<Frame>& frames, std::string_view algo, const BgsParams& params = {});

}  // namespace fuselab::bgs
