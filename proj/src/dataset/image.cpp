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

#include "fuselab/image.hpp"

#include <algorithm>
#include <cmath>

namespace fuselab {

bool is_binary(const Image& img) {
    return std::all_of(img.pixels().begin(), img.pixels().end(),
                       [](std::uint8_t v) { return v == kBackground || v == kForeground; });
}

Image resize_mask_nn(const Image& img, std::size_t height, std::size_t width) {
    if(img.empty())
        throw std::invalid_argument("resize_mask_nn: empty source image");
    if(height == 0 || width == 0)
        throw std::invalid_argument("resize_mask_nn: target dimensions must be non-zero");
    std::vector<std::size_t> xmap(width);
    for(std::size_t x = 0; x < width; ++x)
        xmap[x] = std::min(img.width() - 1, (2 * x + 1) * img.width() / (2 * width));
    Image out(height, width);
    for(std::size_t y = 0; y < height; ++y) {
        const std::size_t sy = std::min(img.height() - 1, (2 * y + 1) * img.height() / (2 * height));
        for(std::size_t x = 0; x < width; ++x)
            out(y, x) = img(sy, xmap[x]);
    }
    return out;
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const double v = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace fuselab
