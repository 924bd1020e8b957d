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

#include <algorithm>
#include <cstddef>
#include <new>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fuselab::nn {

/// Cache-line aligned storage. Vectorized reductions then see the same
/// alignment on every run, which keeps results bitwise reproducible.
template<typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template<typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template<typename U>
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
        return true;
    }
};

template<typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense 4-D extent in (batch, channels, height, width) order.
struct Shape {
    std::size_t n = 1;
    std::size_t c = 1;
    std::size_t h = 1;
    std::size_t w = 1;

    std::size_t size() const { return n * c * h * w; }
    std::size_t plane() const { return h * w; }
    bool valid() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
    return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
           std::to_string(s.w) + ")";
}

inline std::ostream& operator<<(std::ostream& os, const Shape& s) { return os << to_string(s); }

/// Row-major (n,c,h,w) tensor. T is float for training and double for gradient verification.
template<typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() : m_shape{}, m_data(1, T(0)) {}

    explicit Tensor(const Shape& shape, T fill = T(0)) : m_shape(shape) {
        if(!shape.valid())
            throw std::invalid_argument("tensor shape components must be >= 1, got " + to_string(shape));
        m_data.assign(shape.size(), fill);
    }

    Tensor(const Shape& shape, const std::vector<T>& data) : m_shape(shape), m_data(data.begin(), data.end()) {
        if(!shape.valid())
            throw std::invalid_argument("tensor shape components must be >= 1, got " + to_string(shape));
        if(m_data.size() != shape.size())
            throw std::invalid_argument("tensor data length does not match shape " + to_string(shape));
    }

    const Shape& shape() const { return m_shape; }
    std::size_t size() const { return m_data.size(); }

    std::span<T> data() { return m_data; }
    std::span<const T> data() const { return m_data; }
    T* raw() { return m_data.data(); }
    const T* raw() const { return m_data.data(); }

    T& operator[](std::size_t i) { return m_data[i]; }
    const T& operator[](std::size_t i) const { return m_data[i]; }

    std::size_t index(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
        return ((n * m_shape.c + c) * m_shape.h + y) * m_shape.w + x;
    }
    T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) { return m_data[index(n, c, y, x)]; }
    const T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
        return m_data[index(n, c, y, x)];
    }

    /// Pointer to the start of the (n,c) image plane.
    T* plane(std::size_t n, std::size_t c) { return m_data.data() + (n * m_shape.c + c) * m_shape.plane(); }
    const T* plane(std::size_t n, std::size_t c) const {
        return m_data.data() + (n * m_shape.c + c) * m_shape.plane();
    }

    void fill(T v) { std::fill(m_data.begin(), m_data.end(), v); }

    template<typename U>
    Tensor<U> cast() const {
        std::vector<U> out(m_data.begin(), m_data.end());
        return Tensor<U>(m_shape, std::move(out));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape m_shape;
    AlignedVector<T> m_data;
};

}  // namespace fuselab::nn
