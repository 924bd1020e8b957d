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

#include "doctest.h"

#include "fuselab/nn/grad_check.hpp"
#include "fuselab/nn/layers.hpp"
#include "fuselab/nn/loss.hpp"
#include "fuselab/nn/optim.hpp"
#include "gradient_suite.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace fuselab::nn;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("tensor rejects empty shapes and mismatched data") {
    CHECK_THROWS_AS(Tensor<float>(Shape{0, 1, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor<float>(Shape{1, 1, 2, 2}, std::vector<float>(3)), std::invalid_argument);
    Tensor<float> t(Shape{2, 3, 4, 5}, 1.5f);
    CHECK(t.size() == 120);
    CHECK(t.at(1, 2, 3, 4) == 1.5f);
    CHECK(t.index(1, 2, 3, 4) == 119);
}

TEST_CASE("conv3x3 with an all-ones kernel counts valid taps") {
    Tensor<double> x(Shape{1, 1, 3, 3}, 1.0);
    Tensor<double> w(Shape{1, 1, 3, 3}, 1.0);
    const std::vector<double> b{0.0};
    const auto y = conv3x3<double>(x, w, b);
    CHECK(y.shape() == Shape{1, 1, 3, 3});
    CHECK(y.at(0, 0, 1, 1) == 9.0);
    CHECK(y.at(0, 0, 0, 0) == 4.0);
    CHECK(y.at(0, 0, 2, 2) == 4.0);
    CHECK(y.at(0, 0, 0, 1) == 6.0);
}

TEST_CASE("conv3x3 identity kernel reproduces the input") {
    const auto x = uniform_tensor(Shape{2, 1, 5, 7}, 3);
    Tensor<double> w(Shape{1, 1, 3, 3});
    w.at(0, 0, 1, 1) = 1.0;
    const std::vector<double> b{0.0};
    CHECK(conv3x3<double>(x, w, b) == x);
}

TEST_CASE("conv3x3 argument errors") {
    Tensor<float> x(Shape{1, 2, 4, 4});
    const std::vector<float> b1{0.f};
    CHECK_THROWS_AS(conv3x3<float>(x, Tensor<float>(Shape{1, 3, 3, 3}), b1), std::invalid_argument);
    CHECK_THROWS_AS(conv3x3<float>(x, Tensor<float>(Shape{1, 2, 5, 5}), b1), std::invalid_argument);
}

TEST_CASE("conv3x3 is linear in x for zero bias") {
    const auto x1 = uniform_tensor(Shape{1, 2, 6, 6}, 11);
    const auto x2 = uniform_tensor(Shape{1, 2, 6, 6}, 12);
    const auto w = uniform_tensor(Shape{3, 2, 3, 3}, 13);
    const std::vector<double> b(3, 0.0);
    Tensor<double> sum(x1.shape());
    for(std::size_t i = 0; i < sum.size(); ++i)
        sum[i] = 2.0 * x1[i] - 0.5 * x2[i];
    const auto y1 = conv3x3<double>(x1, w, b), y2 = conv3x3<double>(x2, w, b), ys = conv3x3<double>(sum, w, b);
    for(std::size_t i = 0; i < ys.size(); ++i)
        CHECK(ys[i] == doctest::Approx(2.0 * y1[i] - 0.5 * y2[i]).epsilon(1e-12));
}

TEST_CASE("relu values, idempotence and zero-gradient at zero") {
    Tensor<double> x(Shape{1, 1, 1, 3}, std::vector<double>{-1.0, 0.0, 2.0});
    CHECK(to_vec(relu(x).data()) == std::vector<double>{0.0, 0.0, 2.0});
    const auto r = uniform_tensor(Shape{2, 3, 4, 4}, 5);
    CHECK(relu(relu(r)) == relu(r));
    const Tensor<double> ones(x.shape(), 1.0);
    CHECK(to_vec(relu_backward(x, ones).data()) == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("maxpool2 values, tie rule and odd-size error") {
    Tensor<double> x(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    CHECK(maxpool2(x)[0] == 4.0);
    const Tensor<double> c(Shape{1, 2, 6, 4}, 3.25);
    const auto pc = maxpool2(c);
    CHECK(pc.shape() == Shape{1, 2, 3, 2});
    CHECK(pc == Tensor<double>(Shape{1, 2, 3, 2}, 3.25));
    // all four equal: the first in scan order receives the gradient
    const Tensor<double> tie(Shape{1, 1, 2, 2}, 1.0);
    const auto g = maxpool2_backward(tie, Tensor<double>(Shape{1, 1, 1, 1}, 5.0));
    CHECK(to_vec(g.data()) == std::vector<double>{5, 0, 0, 0});
    CHECK_THROWS_AS(maxpool2(Tensor<double>(Shape{1, 1, 3, 4})), std::invalid_argument);
    CHECK_THROWS_AS(maxpool2(Tensor<double>(Shape{1, 1, 4, 5})), std::invalid_argument);
}

TEST_CASE("deconv2 paints disjoint 2x2 blocks and doubles size") {
    Tensor<double> x(Shape{1, 1, 1, 1}, 2.5);
    Tensor<double> w(Shape{1, 1, 2, 2}, 1.0);
    const std::vector<double> b{0.0};
    const auto y = deconv2<double>(x, w, b);
    CHECK(y.shape() == Shape{1, 1, 2, 2});
    CHECK(to_vec(y.data()) == std::vector<double>{2.5, 2.5, 2.5, 2.5});
    const std::vector<float> bf{0.f, 0.f};
    const auto big = deconv2<float>(Tensor<float>(Shape{1, 4, 7, 7}), Tensor<float>(Shape{4, 2, 2, 2}), bf);
    CHECK(big.shape() == Shape{1, 2, 14, 14});
    CHECK_THROWS_AS(deconv2<float>(Tensor<float>(Shape{1, 4, 7, 7}), Tensor<float>(Shape{4, 2, 3, 3}), bf),
                    std::invalid_argument);
}

TEST_CASE("one pool then one deconv restores spatial dims") {
    const auto x = uniform_tensor(Shape{1, 3, 8, 12}, 1);
    const auto w = uniform_tensor(Shape{3, 3, 2, 2}, 2);
    const std::vector<double> b(3, 0.0);
    const auto y = deconv2<double>(maxpool2(x), w, b);
    CHECK(y.shape() == x.shape());
}

TEST_CASE("concat/split channel algebra") {
    const auto a = uniform_tensor(Shape{1, 2, 4, 4}, 21);
    const auto b = uniform_tensor(Shape{1, 3, 4, 4}, 22);
    const auto c = concat_channels(a, b);
    CHECK(c.shape() == Shape{1, 5, 4, 4});
    const auto [sa, sb] = split_channels(c, 2);
    CHECK(sa == a);
    CHECK(sb == b);
    const auto cz = concat_channels(a, Tensor<double>(b.shape()));
    CHECK(split_channels(cz, 2).first == a);
    CHECK_THROWS_AS(concat_channels(a, Tensor<double>(Shape{1, 3, 4, 5})), std::invalid_argument);
    CHECK_THROWS_AS(concat_channels(a, Tensor<double>(Shape{2, 3, 4, 4})), std::invalid_argument);
}

TEST_CASE("softmax_channels normalization and shift invariance") {
    Tensor<double> z(Shape{1, 2, 1, 1});
    const auto p = softmax_channels(z);
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);

    auto logits = uniform_tensor(Shape{2, 2, 5, 5}, 31, -5.0, 5.0);
    auto shifted = logits;
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> kdist(-100.0, 100.0);
    for(std::size_t n = 0; n < 2; ++n)
        for(std::size_t i = 0; i < 25; ++i) {
            const double k = kdist(rng);
            shifted.plane(n, 0)[i] += k;
            shifted.plane(n, 1)[i] += k;
        }
    const auto p1 = softmax_channels(logits), p2 = softmax_channels(shifted);
    for(std::size_t i = 0; i < p1.size(); ++i)
        CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-10));

    Tensor<float> extreme(Shape{1, 2, 1, 4}, std::vector<float>{1e4f, -1e4f, 0.f, 3.f, -1e4f, 1e4f, 0.f, -2.f});
    const auto pe = softmax_channels(extreme);
    for(std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(pe.plane(0, 0)[i] + pe.plane(0, 1)[i] - 1.0f) <= 1e-6f);
    CHECK_THROWS_AS(softmax_channels(Tensor<float>(Shape{1, 3, 2, 2})), std::invalid_argument);
}

TEST_CASE("balanced loss: two pixels at 0.5 give ln 2") {
    Tensor<double> prob(Shape{1, 2, 1, 2}, 0.5);
    const std::vector<std::uint8_t> label{1, 0}, ignore{0, 0};
    const auto t = balanced_ce_loss(prob, label, ignore);
    CHECK(t.beta.at(0) == 0.5);
    CHECK(t.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(t.loss == doctest::Approx(0.693147).epsilon(1e-6));
}

TEST_CASE("balanced loss degenerates to zero for single-class labels") {
    const auto logits = uniform_tensor(Shape{1, 2, 4, 4}, 41, -3, 3);
    const auto prob = softmax_channels(logits);
    const std::vector<std::uint8_t> bg(16, 0), fg(16, 1), none(16, 0);
    const auto tb = balanced_ce_loss(prob, bg, none);
    CHECK(tb.beta.at(0) == 1.0);
    CHECK(tb.loss == 0.0);
    const auto tf = balanced_ce_loss(prob, fg, none);
    CHECK(tf.beta.at(0) == 0.0);
    CHECK(tf.loss == 0.0);
    for(double g : tf.grad_logits.data())
        CHECK(g == 0.0);
}

TEST_CASE("balanced loss ignores pixels for both sums and beta") {
    Tensor<double> prob(Shape{1, 2, 1, 4}, 0.5);
    const std::vector<std::uint8_t> label{1, 0, 0, 0}, ignore{0, 0, 1, 1};
    const auto t = balanced_ce_loss(prob, label, ignore);
    CHECK(t.beta.at(0) == 0.5);
    CHECK(t.loss == doctest::Approx(std::log(2.0)));
    const std::vector<std::uint8_t> bad{2, 0, 0, 0};
    CHECK_THROWS_AS(balanced_ce_loss(prob, bad, ignore), std::invalid_argument);
    const std::vector<std::uint8_t> bad_ignored{1, 0, 7, 0};
    CHECK_NOTHROW(balanced_ce_loss(prob, bad_ignored, ignore));
    CHECK_THROWS_AS(balanced_ce_loss(prob, std::vector<std::uint8_t>(3), ignore), std::invalid_argument);
}

TEST_CASE("balanced loss is non-negative and tiny for clamped perfect predictions") {
    std::mt19937_64 rng(51);
    for(int trial = 0; trial < 50; ++trial) {
        const auto prob = softmax_channels(uniform_tensor(Shape{2, 2, 3, 3}, 100 + trial, -6, 6));
        std::vector<std::uint8_t> label(18), ignore(18);
        for(auto& v : label)
            v = rng() & 1u;
        for(auto& v : ignore)
            v = (rng() % 5) == 0;
        CHECK(balanced_ce_loss(prob, label, ignore).loss >= 0.0);
    }
    const std::vector<std::uint8_t> label{1, 0, 1, 0, 0, 0}, ignore(6, 0);
    Tensor<double> perfect(Shape{1, 2, 1, 6});
    for(std::size_t i = 0; i < 6; ++i) {
        perfect.plane(0, kForegroundChannel)[i] = label[i];
        perfect.plane(0, kBackgroundChannel)[i] = 1 - label[i];
    }
    CHECK(balanced_ce_loss(perfect, label, ignore).loss <= 6 * 2e-7);
}

TEST_CASE("adam: zero gradient is the identity, first step has magnitude lr") {
    ParamStore<double> ps;
    ps.add("w", uniform_tensor(Shape{1, 2, 3, 3}, 61));
    const auto before = ps[0].value;
    AdamState<double> st(ps, AdamHyper{1e-3, 0.9, 0.999, 1e-8});
    adam_step(ps, st);
    CHECK(ps[0].value == before);
    CHECK(st.t == 1);

    ParamStore<double> ps2;
    ps2.add("w", Tensor<double>(Shape{1, 1, 2, 2}, 0.0));
    ps2[0].grad = Tensor<double>(Shape{1, 1, 2, 2}, std::vector<double>{0.3, -2.0, 1e-2, -5.0});
    AdamState<double> st2(ps2, AdamHyper{1e-3, 0.9, 0.999, 1e-8});
    adam_step(ps2, st2);
    const std::vector<double> expected{-1e-3, 1e-3, -1e-3, 1e-3};
    for(std::size_t i = 0; i < 4; ++i)
        CHECK(ps2[0].value[i] == doctest::Approx(expected[i]).epsilon(1e-5));
    for(double v : st2.v[0].data())
        CHECK(v >= 0.0);
}

TEST_CASE("adam is deterministic and validates shapes") {
    auto run = [] {
        ParamStore<float> ps;
        ps.add("a", he_init<float>(Shape{4, 3, 3, 3}, 7));
        ps.add("b", Tensor<float>(Shape{4, 1, 1, 1}), 1);
        AdamState<float> st(ps, AdamHyper{});
        for(int step = 0; step < 5; ++step) {
            for(auto& p : ps)
                for(std::size_t i = 0; i < p.grad.size(); ++i)
                    p.grad[i] = std::sin(static_cast<float>(i + step));
            adam_step(ps, st);
        }
        return ps[0].value;
    };
    CHECK(run() == run());

    ParamStore<float> ps;
    ps.add("a", Tensor<float>(Shape{2, 1, 1, 1}));
    AdamState<float> st(ps, AdamHyper{});
    st.m[0] = Tensor<float>(Shape{3, 1, 1, 1});
    CHECK_THROWS_AS(adam_step(ps, st), std::invalid_argument);
}

TEST_CASE("he_init statistics and seeding") {
    const Shape s{12500, 8, 1, 1};
    const auto t = he_init<double>(s, 2024);
    double mean = 0.0;
    for(double v : t.data())
        mean += v;
    mean /= static_cast<double>(t.size());
    double var = 0.0;
    for(double v : t.data())
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(t.size());
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 2.0 / 8.0) < 0.05 * (2.0 / 8.0));
    CHECK(he_init<float>(Shape{4, 3, 3, 3}, 9) == he_init<float>(Shape{4, 3, 3, 3}, 9));
    CHECK_FALSE(he_init<float>(Shape{4, 3, 3, 3}, 9) == he_init<float>(Shape{4, 3, 3, 3}, 10));
    CHECK_THROWS_AS(he_init<float>(Shape{0, 3, 3, 3}, 9), std::invalid_argument);
}

TEST_CASE("grad_check reports non-finite values") {
    const TensorList in{Tensor<double>(Shape{1, 1, 1, 2}, 1.0)};
    CHECK_THROWS_AS(grad_check([](const TensorList&) { return std::nan(""); },
                               [](const TensorList& x) { return x; }, in),
                    std::domain_error);
}

TEST_CASE("gradient suite: every layer matches central differences") {
    for(const auto& c : fuselab::testing::gradient_suite()) {
        CAPTURE(c.name);
        const auto r = c.run();
        CAPTURE(r.analytic);
        CAPTURE(r.numeric);
        CHECK(r.max_rel_err < c.tolerance);
    }
}

namespace {

Tensor<double> naive_conv3x3(const Tensor<double>& x, const Tensor<double>& w, const std::vector<double>& b) {
    const Shape& s = x.shape();
    const std::size_t cout = w.shape().n;
    Tensor<double> y(Shape{s.n, cout, s.h, s.w});
    for(std::size_t n = 0; n < s.n; ++n)
        for(std::size_t co = 0; co < cout; ++co)
            for(std::size_t yy = 0; yy < s.h; ++yy)
                for(std::size_t xx = 0; xx < s.w; ++xx) {
                    double acc = b[co];
                    for(std::size_t ci = 0; ci < s.c; ++ci)
                        for(int ky = 0; ky < 3; ++ky)
                            for(int kx = 0; kx < 3; ++kx) {
                                const long iy = static_cast<long>(yy) + ky - 1;
                                const long ix = static_cast<long>(xx) + kx - 1;
                                if(iy < 0 || ix < 0 || iy >= static_cast<long>(s.h) || ix >= static_cast<long>(s.w))
                                    continue;
                                acc += w.at(co, ci, static_cast<std::size_t>(ky), static_cast<std::size_t>(kx)) *
                                       x.at(n, ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                            }
                    y.at(n, co, yy, xx) = acc;
                }
    return y;
}

Tensor<double> naive_deconv2(const Tensor<double>& x, const Tensor<double>& w, const std::vector<double>& b) {
    const Shape& s = x.shape();
    const std::size_t cout = w.shape().c;
    Tensor<double> y(Shape{s.n, cout, 2 * s.h, 2 * s.w});
    for(std::size_t n = 0; n < s.n; ++n)
        for(std::size_t co = 0; co < cout; ++co)
            for(std::size_t yy = 0; yy < 2 * s.h; ++yy)
                for(std::size_t xx = 0; xx < 2 * s.w; ++xx) {
                    double acc = b[co];
                    for(std::size_t ci = 0; ci < s.c; ++ci)
                        acc += x.at(n, ci, yy / 2, xx / 2) * w.at(ci, co, yy % 2, xx % 2);
                    y.at(n, co, yy, xx) = acc;
                }
    return y;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
    REQUIRE(a.shape() == b.shape());
    double m = 0.0;
    for(std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("conv3x3 and deconv2 agree with direct summation") {
    const auto x = uniform_tensor(Shape{2, 5, 9, 6}, 41);
    const auto wc = uniform_tensor(Shape{4, 5, 3, 3}, 42);
    const std::vector<double> bc{0.1, -0.2, 0.3, 0.0};
    CHECK(max_abs_diff(conv3x3<double>(x, wc, bc), naive_conv3x3(x, wc, bc)) <= 1e-12);
    const auto wd = uniform_tensor(Shape{5, 3, 2, 2}, 43);
    const std::vector<double> bd{0.5, 0.0, -0.5};
    CHECK(max_abs_diff(deconv2<double>(x, wd, bd), naive_deconv2(x, wd, bd)) <= 1e-12);
}
