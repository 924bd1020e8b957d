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

#include "fuselab/nn/tensor.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fuselab::nn {

template<typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    /// Logical rank used for serialization: 4 for kernels, 1 for bias vectors.
    std::uint32_t rank = 4;
};

/// Ordered, uniquely named parameters with matching gradient buffers.
template<typename T>
class ParamStore {
public:
    Parameter<T>& add(std::string name, Tensor<T> value, std::uint32_t rank = 4) {
        if(find(name))
            throw std::invalid_argument("duplicate parameter name '" + name + "'");
        Tensor<T> grad(value.shape());
        m_params.push_back(Parameter<T>{std::move(name), std::move(value), std::move(grad), rank});
        return m_params.back();
    }

    const Parameter<T>* find(const std::string& name) const {
        for(const auto& p : m_params)
            if(p.name == name)
                return &p;
        return nullptr;
    }
    Parameter<T>* find(const std::string& name) {
        return const_cast<Parameter<T>*>(std::as_const(*this).find(name));
    }

    Parameter<T>& at(const std::string& name) {
        if(auto* p = find(name))
            return *p;
        throw std::out_of_range("no parameter named '" + name + "'");
    }
    const Parameter<T>& at(const std::string& name) const {
        if(const auto* p = find(name))
            return *p;
        throw std::out_of_range("no parameter named '" + name + "'");
    }

    void zero_grad() {
        for(auto& p : m_params)
            p.grad.fill(T(0));
    }

    std::size_t size() const { return m_params.size(); }
    std::size_t scalar_count() const {
        std::size_t n = 0;
        for(const auto& p : m_params)
            n += p.value.size();
        return n;
    }

    auto begin() { return m_params.begin(); }
    auto end() { return m_params.end(); }
    auto begin() const { return m_params.begin(); }
    auto end() const { return m_params.end(); }
    Parameter<T>& operator[](std::size_t i) { return m_params[i]; }
    const Parameter<T>& operator[](std::size_t i) const { return m_params[i]; }

    template<typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for(const auto& p : m_params)
            out.add(p.name, p.value.template cast<U>(), p.rank);
        return out;
    }

private:
    std::vector<Parameter<T>> m_params;
};

}  // namespace fuselab::nn
