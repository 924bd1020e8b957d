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

#include "fuselab/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace fuselab::nn {

namespace {

double checked(double v, const char* what) {
    if(!std::isfinite(v))
        throw std::domain_error(std::string("grad_check: non-finite ") + what);
    return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<double(const TensorList&)>& objective,
                           const std::function<TensorList(const TensorList&)>& gradient, TensorList inputs,
                           double eps) {
    if(!(eps > 0.0))
        throw std::invalid_argument("grad_check: eps must be positive");
    checked(objective(inputs), "objective value");
    const TensorList analytic = gradient(inputs);
    if(analytic.size() != inputs.size())
        throw std::invalid_argument("grad_check: gradient count does not match input count");
    GradCheckResult res;
    for(std::size_t t = 0; t < inputs.size(); ++t) {
        if(analytic[t].shape() != inputs[t].shape())
            throw std::invalid_argument("grad_check: gradient shape mismatch for input " + std::to_string(t));
        for(std::size_t i = 0; i < inputs[t].size(); ++i) {
            const double orig = inputs[t][i];
            inputs[t][i] = orig + eps;
            const double fp = checked(objective(inputs), "objective value");
            inputs[t][i] = orig - eps;
            const double fm = checked(objective(inputs), "objective value");
            inputs[t][i] = orig;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double a = checked(analytic[t][i], "analytic gradient");
            const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
            const double rel = std::abs(a - numeric) / denom;
            if(rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_input = t;
                res.worst_index = i;
                res.analytic = a;
                res.numeric = numeric;
            }
        }
    }
    return res;
}

Tensor<double> uniform_tensor(const Shape& shape, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor<double> t(shape);
    for(auto& v : t.data())
        v = dist(rng);
    return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    if(a.shape() != b.shape())
        throw std::invalid_argument("dot: shape mismatch");
    double s = 0.0;
    for(std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

}  // namespace fuselab::nn
