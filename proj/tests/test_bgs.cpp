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

#include "bgs_sanity.hpp"
#include "fuselab/bgs.hpp"
#include "fuselab/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fuselab;
using namespace fuselab::bgs;

namespace {

std::vector<Frame> constant_video(std::size_t n, std::uint8_t v, std::size_t h = 8, std::size_t w = 8) {
    return std::vector<Frame>(n, Frame(h, w, v));
}

std::vector<Frame> noisy_video(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(100.0, 5.0);
    std::vector<Frame> frames;
    for(std::size_t t = 0; t < n; ++t) {
        Frame f(6, 6);
        for(auto& v : f.pixels())
            v = static_cast<std::uint8_t>(std::clamp(std::lround(noise(rng)), 0L, 255L));
        frames.push_back(f);
    }
    return frames;
}

bool all_background(const Mask& m) {
    return std::all_of(m.pixels().begin(), m.pixels().end(), [](auto v) { return v == 0; });
}

}  // namespace

TEST_CASE("gmm: constant video is background at frame 100") {
    const auto masks = run_bgs(constant_video(100, 90), "gmm");
    CHECK(all_background(masks.back()));
}

TEST_CASE("gmm: a jump of 10 lambda sigma after burn-in is foreground") {
    GmmModel model;
    Frame f(4, 4, 100);
    for(int t = 0; t < 200; ++t)
        model.step(f);
    const auto comps = model.components(5);
    const double sigma = std::sqrt(comps.front().var);
    Frame g = f;
    g(1, 1) = static_cast<std::uint8_t>(100 + std::lround(10 * model.params().lambda * sigma));
    const Mask m = model.step(g);
    CHECK(m(1, 1) == 255);
    CHECK(m(0, 0) == 0);
}

TEST_CASE("gmm: weights sum to one and variances respect the floor after every step") {
    GmmModel model;
    const auto frames = noisy_video(120, 3);
    // inject abrupt changes so new components keep appearing
    for(std::size_t t = 0; t < frames.size(); ++t) {
        Frame f = frames[t];
        if(t % 17 == 5)
            for(auto& v : f.pixels())
                v = static_cast<std::uint8_t>(255 - v);
        model.step(f);
        for(std::size_t i = 0; i < f.size(); ++i) {
            const auto comps = model.components(i);
            REQUIRE(!comps.empty());
            REQUIRE(comps.size() <= 5);
            double sum = 0.0;
            for(const auto& c : comps) {
                sum += c.weight;
                REQUIRE(c.var >= model.params().var_floor);
            }
            REQUIRE(std::abs(sum - 1.0) <= 1e-6);
            for(std::size_t k = 1; k < comps.size(); ++k)
                REQUIRE(comps[k - 1].weight / std::sqrt(comps[k - 1].var) >=
                        comps[k].weight / std::sqrt(comps[k].var));
        }
    }
}

TEST_CASE("gmm: dimension mismatch and parameter validation") {
    GmmModel model;
    model.step(Frame(4, 4));
    CHECK_THROWS_AS(model.step(Frame(4, 5)), DataError);
    GmmParams p;
    p.alpha = 0.0;
    CHECK_THROWS_AS(GmmModel{p}, ConfigError);
}

TEST_CASE("sc: pixels equal to all samples are background, far pixels foreground") {
    SampleConsensusModel model;
    model.initialize(Frame(5, 5, 80));
    for(std::size_t i = 0; i < 25; ++i) {
        const auto s = model.samples(i);
        REQUIRE(s.size() == 20);
        CHECK(std::all_of(s.begin(), s.end(), [](auto v) { return v == 80; }));
    }
    Frame f(5, 5, 80);
    f(2, 2) = 80 + 21;
    f(0, 4) = 80 - 25;
    const Mask m = model.step(f);
    CHECK(m(2, 2) == 255);
    CHECK(m(0, 4) == 255);
    CHECK(m(1, 1) == 0);
    // R is exclusive: a difference of 19 matches, 20 does not
    SampleConsensusModel edge;
    edge.initialize(Frame(3, 3, 100));
    Frame e(3, 3, 119);
    e(0, 0) = 120;
    const Mask em = edge.step(e);
    CHECK(em(1, 1) == 0);
    CHECK(em(0, 0) == 255);
}

TEST_CASE("sc: samples come from the 8-neighbourhood") {
    Frame f(6, 7);
    for(std::size_t i = 0; i < f.size(); ++i)
        f[i] = static_cast<std::uint8_t>(i);
    SampleConsensusModel model;
    model.initialize(f);
    for(std::size_t y = 0; y < 6; ++y)
        for(std::size_t x = 0; x < 7; ++x)
            for(auto s : model.samples(y * 7 + x)) {
                const std::size_t sy = s / 7, sx = s % 7;
                CHECK((sy != y || sx != x));
                CHECK(std::max(sy, y) - std::min(sy, y) <= 1);
                CHECK(std::max(sx, x) - std::min(sx, x) <= 1);
            }
}

TEST_CASE("sc: exactly S samples per pixel, determinism, and uninitialized use") {
    const auto frames = noisy_video(40, 9);
    SampleConsensusParams p;
    p.seed = 5;
    const auto a = run_bgs(frames, "sc", BgsParams{{}, p, {}});
    const auto b = run_bgs(frames, "sc", BgsParams{{}, p, {}});
    CHECK(a == b);
    p.seed = 6;
    SampleConsensusModel model(p);
    CHECK_THROWS_AS(model.step(frames[0]), std::logic_error);
    model.initialize(frames[0]);
    for(const auto& f : frames)
        model.step(f);
    for(std::size_t i = 0; i < 36; ++i)
        CHECK(model.samples(i).size() == static_cast<std::size_t>(p.samples));
    CHECK_THROWS_AS(model.step(Frame(3, 3)), DataError);
}

TEST_CASE("sc: model updates happen at rate 1/phi") {
    // a static frame that differs slightly from the samples (still matching)
    // leaves a trace only through the random updates
    SampleConsensusParams p;
    p.subsampling = 4;
    SampleConsensusModel model(p);
    model.initialize(Frame(64, 64, 100));
    model.step(Frame(64, 64, 105));
    std::size_t replaced = 0;
    for(std::size_t i = 0; i < 64 * 64; ++i)
        for(auto s : model.samples(i))
            replaced += s == 105;
    // own update (1/phi) + neighbour update (1/phi), one sample each
    const double expected = 2.0 * 64 * 64 / p.subsampling;
    CHECK(static_cast<double>(replaced) == doctest::Approx(expected).epsilon(0.1));
}

TEST_CASE("median: constant video is background from frame 2, spike only on its frame") {
    auto frames = constant_video(60, 120);
    frames[30](3, 3) = 120 + 60;
    const auto masks = run_bgs(frames, "median");
    for(std::size_t t = 0; t < masks.size(); ++t) {
        const bool spike = t == 30;
        CHECK((masks[t](3, 3) == 255) == spike);
    }
    CHECK(all_background(masks[1]));
}

TEST_CASE("median: buffer is capped and the median is exact") {
    MedianParams p;
    p.buffer = 4;
    p.threshold = 10;
    MedianModel model(p);
    for(std::uint8_t v : {10, 20, 30, 40, 50, 60})
        model.step(Frame(1, 1, v));
    CHECK(model.buffered() == 4);
    // buffer {30,40,50,60}: median 45, so 56 is foreground and 55 is not
    MedianModel copy = model;
    CHECK(model.step(Frame(1, 1, 56))[0] == 255);
    CHECK(copy.step(Frame(1, 1, 55))[0] == 0);
    CHECK_THROWS_AS(model.step(Frame(2, 1)), DataError);
}

TEST_CASE("run_bgs: one binary mask per frame, errors") {
    const auto frames = noisy_video(100, 4);
    for(const char* algo : {"gmm", "sc", "median"}) {
        const auto masks = run_bgs(frames, algo);
        REQUIRE(masks.size() == 100);
        for(const auto& m : masks) {
            CHECK(m.same_dims(frames[0]));
            CHECK(is_binary(m));
        }
    }
    CHECK_THROWS_AS(run_bgs(frames, "xyz"), ConfigError);
    CHECK_THROWS_AS(run_bgs({}, "gmm"), DataError);
    CHECK_THROWS_AS(run_bgs({Frame(2, 2), Frame(3, 2)}, "median"), DataError);
}

TEST_CASE("gmm on a noiseless moving square reaches the per-frame F-measure floor after burn-in") {
    const auto video = testing::moving_square_video();
    CHECK(testing::gmm_min_frame_fm(video) >= testing::kGmmMinFrameFm);
}

TEST_CASE("every generator settles on a static video within its burn-in") {
    const auto frames = testing::static_video(120);
    for(const auto& b : testing::kStaticBurnIns) {
        INFO(b.algo);
        CHECK(testing::settle_frame(run_bgs(frames, b.algo)) <= b.frames);
    }
}
