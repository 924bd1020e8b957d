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

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fuselab {

/// Single-channel 8-bit image stored row-major. Used for video frames, binary
/// masks and 5-level ground truth alike.
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, std::uint8_t fill = 0)
            : m_height(height), m_width(width), m_data(height * width, fill) {}
    Image(std::size_t height, std::size_t width, std::vector<std::uint8_t> data)
            : m_height(height), m_width(width), m_data(std::move(data)) {
        if(m_data.size() != height * width)
            throw std::invalid_argument("image data length does not match " + std::to_string(height) + "x" +
                                        std::to_string(width));
    }

    std::size_t height() const { return m_height; }
    std::size_t width() const { return m_width; }
    std::size_t size() const { return m_data.size(); }
    bool empty() const { return m_data.empty(); }
    bool same_dims(const Image& o) const { return m_height == o.m_height && m_width == o.m_width; }

    std::uint8_t& operator()(std::size_t y, std::size_t x) { return m_data[y * m_width + x]; }
    std::uint8_t operator()(std::size_t y, std::size_t x) const { return m_data[y * m_width + x]; }
    std::uint8_t& operator[](std::size_t i) { return m_data[i]; }
    std::uint8_t operator[](std::size_t i) const { return m_data[i]; }

    std::span<std::uint8_t> pixels() { return m_data; }
    std::span<const std::uint8_t> pixels() const { return m_data; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t m_height = 0;
    std::size_t m_width = 0;
    std::vector<std::uint8_t> m_data;
};

using Frame = Image;
using Mask = Image;

inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kForeground = 255;

/// CDnet ground-truth pixel codes.
namespace gt {
inline constexpr std::uint8_t kStatic = 0;
inline constexpr std::uint8_t kShadow = 50;
inline constexpr std::uint8_t kOutsideRoi = 85;
inline constexpr std::uint8_t kUnknown = 170;
inline constexpr std::uint8_t kMotion = 255;
}  // namespace gt

/// True when every pixel is 0 or 255.
bool is_binary(const Image& img);

/// Nearest-neighbour resize; source index = floor((2*dst + 1) * src / (2 * dst_size)).
/// Output values are always a subset of the input values.
Image resize_mask_nn(const Image& img, std::size_t height, std::size_t width);

/// 0.299 R + 0.587 G + 0.114 B, rounded to nearest.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace fuselab
