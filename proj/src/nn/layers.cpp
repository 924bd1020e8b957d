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

#include "fuselab/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fuselab::nn {

namespace {

template<typename T>
void check_conv_args(const Tensor<T>& x, const Tensor<T>& w, std::size_t nbias) {
    const Shape& ws = w.shape();
    if(ws.h != 3 || ws.w != 3)
        throw std::invalid_argument("conv3x3: kernel must be 3x3, got " + to_string(ws));
    if(ws.c != x.shape().c)
        throw std::invalid_argument("conv3x3: input has " + std::to_string(x.shape().c) +
                                    " channels but kernel expects " + std::to_string(ws.c));
    if(nbias != ws.n)
        throw std::invalid_argument("conv3x3: bias length does not match output channels");
}

template<typename T>
void check_deconv_args(const Tensor<T>& x, const Tensor<T>& w, std::size_t nbias) {
    const Shape& ws = w.shape();
    if(ws.h != 2 || ws.w != 2)
        throw std::invalid_argument("deconv2: kernel must be 2x2, got " + to_string(ws));
    if(ws.n != x.shape().c)
        throw std::invalid_argument("deconv2: input has " + std::to_string(x.shape().c) +
                                    " channels but kernel expects " + std::to_string(ws.n));
    if(nbias != ws.c)
        throw std::invalid_argument("deconv2: bias length does not match output channels");
}

// Row-major Eigen views over raw tensor storage.
template<typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template<typename T>
using RowMat = Eigen::Map<RowMatrix<T>>;
template<typename T>
using ConstRowMat = Eigen::Map<const RowMatrix<T>>;

// Upper bound on im2col scratch per block (elements).
constexpr std::size_t kColBlockElems = std::size_t{1} << 21;

template<typename F>
void for_each_row_block(std::size_t H, std::size_t W, std::size_t rows_per_col, F&& fn) {
    const std::size_t per_row = std::max<std::size_t>(1, rows_per_col * W);
    const std::size_t step = std::clamp<std::size_t>(kColBlockElems / per_row, 1, H);
    for(std::size_t y0 = 0; y0 < H; y0 += step)
        fn(y0, std::min(H, y0 + step));
}

// col[(ci*9 + tap) , (y - y0)*W + x] = x[ci, y + ky - 1, x + kx - 1], zero outside.
template<typename T>
void im2col3x3(const T* src, std::size_t cin, std::size_t H, std::size_t W, std::size_t y0, std::size_t y1,
               AlignedVector<T>& col) {
    const std::size_t cols = (y1 - y0) * W;
    col.assign(cin * 9 * cols, T(0));
    for(std::size_t ci = 0; ci < cin; ++ci) {
        const T* plane = src + ci * H * W;
        for(int ky = 0; ky < 3; ++ky)
            for(int kx = 0; kx < 3; ++kx) {
                T* dst = col.data() + (ci * 9 + static_cast<std::size_t>(ky * 3 + kx)) * cols;
                const std::size_t xa = kx == 0 ? 1 : 0, xb = kx == 2 ? W - 1 : W;
                for(std::size_t y = y0; y < y1; ++y) {
                    const long sy = static_cast<long>(y) + ky - 1;
                    if(sy < 0 || sy >= static_cast<long>(H))
                        continue;
                    const T* srow = plane + static_cast<std::size_t>(sy) * W + kx - 1;
                    T* drow = dst + (y - y0) * W;
                    for(std::size_t xx = xa; xx < xb; ++xx)
                        drow[xx] = srow[xx];
                }
            }
    }
}

template<typename T>
void col2im3x3(const AlignedVector<T>& col, std::size_t cin, std::size_t H, std::size_t W, std::size_t y0,
               std::size_t y1, T* dst) {
    const std::size_t cols = (y1 - y0) * W;
    for(std::size_t ci = 0; ci < cin; ++ci) {
        T* plane = dst + ci * H * W;
        for(int ky = 0; ky < 3; ++ky)
            for(int kx = 0; kx < 3; ++kx) {
                const T* src = col.data() + (ci * 9 + static_cast<std::size_t>(ky * 3 + kx)) * cols;
                const std::size_t xa = kx == 0 ? 1 : 0, xb = kx == 2 ? W - 1 : W;
                for(std::size_t y = y0; y < y1; ++y) {
                    const long sy = static_cast<long>(y) + ky - 1;
                    if(sy < 0 || sy >= static_cast<long>(H))
                        continue;
                    T* drow = plane + static_cast<std::size_t>(sy) * W + kx - 1;
                    const T* srow = src + (y - y0) * W;
                    for(std::size_t xx = xa; xx < xb; ++xx)
                        drow[xx] += srow[xx];
                }
            }
    }
}

}  // namespace

template<typename T>
Tensor<T> conv3x3(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> b) {
    check_conv_args(x, w, b.size());
    const Shape& xs = x.shape();
    const std::size_t cout = w.shape().n, cin = xs.c, H = xs.h, W = xs.w, HW = H * W;
    Tensor<T> out(Shape{xs.n, cout, H, W});
    const ConstRowMat<T> wmat(w.raw(), cout, cin * 9);
    AlignedVector<T> col;
    for(std::size_t n = 0; n < xs.n; ++n) {
        RowMat<T> oplane(out.plane(n, 0), cout, HW);
        for_each_row_block(H, W, cin * 9, [&](std::size_t y0, std::size_t y1) {
            const std::size_t cols = (y1 - y0) * W;
            im2col3x3(x.plane(n, 0), cin, H, W, y0, y1, col);
            const ConstRowMat<T> cmat(col.data(), cin * 9, cols);
            oplane.middleCols(y0 * W, cols).noalias() = wmat * cmat;
        });
        for(std::size_t co = 0; co < cout; ++co)
            oplane.row(co).array() += b[co];
    }
    return out;
}

template<typename T>
ConvGrads<T> conv3x3_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy) {
    check_conv_args(x, w, w.shape().n);
    const Shape& xs = x.shape();
    const std::size_t cout = w.shape().n, cin = xs.c, H = xs.h, W = xs.w, HW = H * W;
    if(dy.shape() != Shape{xs.n, cout, H, W})
        throw std::invalid_argument("conv3x3_backward: upstream gradient shape mismatch");
    ConvGrads<T> g{Tensor<T>(xs), Tensor<T>(w.shape()), std::vector<T>(cout, T(0))};
    const ConstRowMat<T> wmat(w.raw(), cout, cin * 9);
    RowMat<T> dwmat(g.dw.raw(), cout, cin * 9);
    AlignedVector<T> col, dcol;
    for(std::size_t n = 0; n < xs.n; ++n) {
        const ConstRowMat<T> gplane(dy.plane(n, 0), cout, HW);
        for(std::size_t co = 0; co < cout; ++co)
            g.db[co] += gplane.row(co).sum();
        for_each_row_block(H, W, cin * 9, [&](std::size_t y0, std::size_t y1) {
            const std::size_t cols = (y1 - y0) * W;
            im2col3x3(x.plane(n, 0), cin, H, W, y0, y1, col);
            const ConstRowMat<T> cmat(col.data(), cin * 9, cols);
            const auto gblock = gplane.middleCols(y0 * W, cols);
            dwmat.noalias() += gblock * cmat.transpose();
            dcol.resize(cin * 9 * cols);
            RowMat<T> dcmat(dcol.data(), cin * 9, cols);
            dcmat.noalias() = wmat.transpose() * gblock;
            col2im3x3(dcol, cin, H, W, y0, y1, g.dx.plane(n, 0));
        });
    }
    return g;
}

template<typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    for(std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] > T(0) ? x[i] : T(0);
    return out;
}

template<typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
    if(x.shape() != dy.shape())
        throw std::invalid_argument("relu_backward: shape mismatch");
    Tensor<T> dx(x.shape());
    for(std::size_t i = 0; i < x.size(); ++i)
        dx[i] = x[i] > T(0) ? dy[i] : T(0);
    return dx;
}

template<typename T>
Tensor<T> maxpool2(const Tensor<T>& x) {
    const Shape& xs = x.shape();
    if(xs.h % 2 != 0 || xs.w % 2 != 0)
        throw std::invalid_argument("maxpool2: height and width must be even, got " + to_string(xs));
    const std::size_t ho = xs.h / 2, wo = xs.w / 2;
    Tensor<T> out(Shape{xs.n, xs.c, ho, wo});
    for(std::size_t n = 0; n < xs.n; ++n)
        for(std::size_t c = 0; c < xs.c; ++c) {
            const T* ip = x.plane(n, c);
            T* op = out.plane(n, c);
            for(std::size_t y = 0; y < ho; ++y)
                for(std::size_t xx = 0; xx < wo; ++xx) {
                    const T* r0 = ip + (2 * y) * xs.w + 2 * xx;
                    const T* r1 = r0 + xs.w;
                    op[y * wo + xx] = std::max(std::max(r0[0], r0[1]), std::max(r1[0], r1[1]));
                }
        }
    return out;
}

template<typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& x, const Tensor<T>& dy) {
    const Shape& xs = x.shape();
    if(xs.h % 2 != 0 || xs.w % 2 != 0)
        throw std::invalid_argument("maxpool2_backward: height and width must be even");
    const std::size_t ho = xs.h / 2, wo = xs.w / 2;
    if(dy.shape() != Shape{xs.n, xs.c, ho, wo})
        throw std::invalid_argument("maxpool2_backward: upstream gradient shape mismatch");
    Tensor<T> dx(xs);
    for(std::size_t n = 0; n < xs.n; ++n)
        for(std::size_t c = 0; c < xs.c; ++c) {
            const T* ip = x.plane(n, c);
            const T* gp = dy.plane(n, c);
            T* dp = dx.plane(n, c);
            for(std::size_t y = 0; y < ho; ++y)
                for(std::size_t xx = 0; xx < wo; ++xx) {
                    const std::size_t cand[4] = {(2 * y) * xs.w + 2 * xx, (2 * y) * xs.w + 2 * xx + 1,
                                                 (2 * y + 1) * xs.w + 2 * xx, (2 * y + 1) * xs.w + 2 * xx + 1};
                    std::size_t best = cand[0];
                    for(int k = 1; k < 4; ++k)
                        if(ip[cand[k]] > ip[best])
                            best = cand[k];
                    dp[best] += gp[y * wo + xx];
                }
        }
    return dx;
}

template<typename T>
Tensor<T> deconv2(const Tensor<T>& x, const Tensor<T>& w, std::span<const T> b) {
    check_deconv_args(x, w, b.size());
    const Shape& xs = x.shape();
    const std::size_t cin = xs.c, cout = w.shape().c, H = xs.h, W = xs.w, HW = H * W;
    Tensor<T> out(Shape{xs.n, cout, 2 * H, 2 * W});
    const ConstRowMat<T> wmat(w.raw(), cin, cout * 4);
    RowMatrix<T> blocks(cout * 4, HW);
    for(std::size_t n = 0; n < xs.n; ++n) {
        const ConstRowMat<T> xmat(x.plane(n, 0), cin, HW);
        blocks.noalias() = wmat.transpose() * xmat;
        for(std::size_t co = 0; co < cout; ++co) {
            T* op = out.plane(n, co);
            for(std::size_t tap = 0; tap < 4; ++tap) {
                const T* src = blocks.row(co * 4 + tap).data();
                const std::size_t dy = tap / 2, dx = tap % 2;
                for(std::size_t y = 0; y < H; ++y) {
                    T* orow = op + (2 * y + dy) * (2 * W) + dx;
                    for(std::size_t xx = 0; xx < W; ++xx)
                        orow[2 * xx] = src[y * W + xx] + b[co];
                }
            }
        }
    }
    return out;
}

template<typename T>
ConvGrads<T> deconv2_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy) {
    check_deconv_args(x, w, w.shape().c);
    const Shape& xs = x.shape();
    const std::size_t cin = xs.c, cout = w.shape().c, H = xs.h, W = xs.w, HW = H * W;
    if(dy.shape() != Shape{xs.n, cout, 2 * H, 2 * W})
        throw std::invalid_argument("deconv2_backward: upstream gradient shape mismatch");
    ConvGrads<T> g{Tensor<T>(xs), Tensor<T>(w.shape()), std::vector<T>(cout, T(0))};
    const ConstRowMat<T> wmat(w.raw(), cin, cout * 4);
    RowMat<T> dwmat(g.dw.raw(), cin, cout * 4);
    RowMatrix<T> blocks(cout * 4, HW);
    for(std::size_t n = 0; n < xs.n; ++n) {
        for(std::size_t co = 0; co < cout; ++co) {
            const T* gp = dy.plane(n, co);
            g.db[co] += ConstRowMat<T>(gp, 1, 4 * HW).sum();
            for(std::size_t tap = 0; tap < 4; ++tap) {
                T* dst = blocks.row(co * 4 + tap).data();
                const std::size_t ty = tap / 2, tx = tap % 2;
                for(std::size_t y = 0; y < H; ++y) {
                    const T* grow = gp + (2 * y + ty) * (2 * W) + tx;
                    for(std::size_t xx = 0; xx < W; ++xx)
                        dst[y * W + xx] = grow[2 * xx];
                }
            }
        }
        const ConstRowMat<T> xmat(x.plane(n, 0), cin, HW);
        dwmat.noalias() += xmat * blocks.transpose();
        RowMat<T> dxmat(g.dx.plane(n, 0), cin, HW);
        dxmat.noalias() = wmat * blocks;
    }
    return g;
}

template<typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    if(as.n != bs.n || as.h != bs.h || as.w != bs.w)
        throw std::invalid_argument("concat_channels: batch/spatial mismatch " + to_string(as) + " vs " +
                                    to_string(bs));
    Tensor<T> out(Shape{as.n, as.c + bs.c, as.h, as.w});
    const std::size_t P = as.plane();
    for(std::size_t n = 0; n < as.n; ++n) {
        std::copy(a.plane(n, 0), a.plane(n, 0) + as.c * P, out.plane(n, 0));
        std::copy(b.plane(n, 0), b.plane(n, 0) + bs.c * P, out.plane(n, as.c));
    }
    return out;
}

template<typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::size_t channels_a) {
    const Shape& xs = x.shape();
    if(channels_a == 0 || channels_a >= xs.c)
        throw std::invalid_argument("split_channels: split point must leave both parts non-empty");
    Tensor<T> a(Shape{xs.n, channels_a, xs.h, xs.w});
    Tensor<T> b(Shape{xs.n, xs.c - channels_a, xs.h, xs.w});
    const std::size_t P = xs.plane();
    for(std::size_t n = 0; n < xs.n; ++n) {
        std::copy(x.plane(n, 0), x.plane(n, 0) + channels_a * P, a.plane(n, 0));
        std::copy(x.plane(n, channels_a), x.plane(n, 0) + xs.c * P, b.plane(n, 0));
    }
    return {std::move(a), std::move(b)};
}

template<typename T>
Tensor<T> softmax_channels(const Tensor<T>& x) {
    const Shape& xs = x.shape();
    if(xs.c != 2)
        throw std::invalid_argument("softmax_channels: expected 2 channels, got " + std::to_string(xs.c));
    Tensor<T> out(xs);
    const std::size_t P = xs.plane();
    for(std::size_t n = 0; n < xs.n; ++n) {
        const T* z0 = x.plane(n, 0);
        const T* z1 = x.plane(n, 1);
        T* p0 = out.plane(n, 0);
        T* p1 = out.plane(n, 1);
        for(std::size_t i = 0; i < P; ++i) {
            const T m = std::max(z0[i], z1[i]);
            const T e0 = std::exp(z0[i] - m);
            const T e1 = std::exp(z1[i] - m);
            const T s = e0 + e1;
            p0[i] = e0 / s;
            p1[i] = e1 / s;
        }
    }
    return out;
}

template<typename T>
Tensor<T> softmax_channels_backward(const Tensor<T>& prob, const Tensor<T>& dprob) {
    const Shape& ps = prob.shape();
    if(ps.c != 2 || dprob.shape() != ps)
        throw std::invalid_argument("softmax_channels_backward: shape mismatch");
    Tensor<T> dz(ps);
    const std::size_t P = ps.plane();
    for(std::size_t n = 0; n < ps.n; ++n) {
        const T* p0 = prob.plane(n, 0);
        const T* p1 = prob.plane(n, 1);
        const T* g0 = dprob.plane(n, 0);
        const T* g1 = dprob.plane(n, 1);
        T* d0 = dz.plane(n, 0);
        T* d1 = dz.plane(n, 1);
        for(std::size_t i = 0; i < P; ++i) {
            const T dot = p0[i] * g0[i] + p1[i] * g1[i];
            d0[i] = p0[i] * (g0[i] - dot);
            d1[i] = p1[i] * (g1[i] - dot);
        }
    }
    return dz;
}

#define FUSELAB_INSTANTIATE_LAYERS(T)                                                                   \
    template Tensor<T> conv3x3<T>(const Tensor<T>&, const Tensor<T>&, std::span<const T>);              \
    template ConvGrads<T> conv3x3_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
    template Tensor<T> relu<T>(const Tensor<T>&);                                                       \
    template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                            \
    template Tensor<T> maxpool2<T>(const Tensor<T>&);                                                   \
    template Tensor<T> maxpool2_backward<T>(const Tensor<T>&, const Tensor<T>&);                        \
    template Tensor<T> deconv2<T>(const Tensor<T>&, const Tensor<T>&, std::span<const T>);              \
    template ConvGrads<T> deconv2_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
    template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);                          \
    template std::pair<Tensor<T>, Tensor<T>> split_channels<T>(const Tensor<T>&, std::size_t);          \
    template Tensor<T> softmax_channels<T>(const Tensor<T>&);                                           \
    template Tensor<T> softmax_channels_backward<T>(const Tensor<T>&, const Tensor<T>&);

FUSELAB_INSTANTIATE_LAYERS(float)
FUSELAB_INSTANTIATE_LAYERS(double)

}  // namespace fuselab::nn
