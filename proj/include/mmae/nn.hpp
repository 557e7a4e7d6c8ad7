#ifndef MMAE_NN_HPP
#define MMAE_NN_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "mmae/rng.hpp"

namespace mmae {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Activation tensor, channel-planar like Image: row c holds pixel p = y*W + x.
template <class S>
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    MatX<S> m;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w)
        : channels(c), height(h), width(w), m(MatX<S>::Zero(c, static_cast<long>(h) * w)) {}
};

// Named trainable array. `value` is 2-D with rows == shape[0] and
// cols == product of the remaining logical dimensions, so a row-major dump
// of `value` equals the row-major dump of the logical array.
template <class S>
struct Param {
    std::string name;
    std::vector<long> shape;
    MatX<S> value;
    MatX<S> grad;

    void zero_grad() { grad.setZero(); }
    long size() const { return value.size(); }
};

template <class S>
Param<S> make_param(std::string name, std::vector<long> shape) {
    long rows = shape[0], cols = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) cols *= shape[i];
    Param<S> p;
    p.name = std::move(name);
    p.shape = std::move(shape);
    p.value = MatX<S>::Zero(rows, cols);
    p.grad = MatX<S>::Zero(rows, cols);
    return p;
}

// Fan-in-scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)). Draws
// happen in double so float and double models see the same sequence.
template <class S>
void init_uniform_fan_in(Param<S>& p, long fan_in, Rng& rng) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (long r = 0; r < p.value.rows(); ++r)
        for (long c = 0; c < p.value.cols(); ++c)
            p.value(r, c) = static_cast<S>(rng.uniform(-limit, limit));
}

// ---------------------------------------------------------------------------
// 3x3 convolution, padding 1, stride 1 or 2.
// Weight layout: (out_channels, in_channels*9), column index ci*9 + ky*3 + kx.
// ---------------------------------------------------------------------------

template <class S>
struct Conv2dCache {
    MatX<S> col; // (in_channels*9) x (out_h*out_w)
    int in_channels = 0, in_h = 0, in_w = 0;
    int out_h = 0, out_w = 0;
};

template <class S>
void im2col_3x3(const FeatureMap<S>& x, int stride, MatX<S>& col, int out_h, int out_w) {
    const int ic = x.channels, ih = x.height, iw = x.width;
    col.resize(static_cast<long>(ic) * 9, static_cast<long>(out_h) * out_w);
    col.setZero();
    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            const long p = static_cast<long>(oy) * out_w + ox;
            for (int ky = 0; ky < 3; ++ky) {
                const int y = oy * stride + ky - 1;
                if (y < 0 || y >= ih) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int x0 = ox * stride + kx - 1;
                    if (x0 < 0 || x0 >= iw) continue;
                    const long q = static_cast<long>(y) * iw + x0;
                    for (int ci = 0; ci < ic; ++ci) {
                        col(static_cast<long>(ci) * 9 + ky * 3 + kx, p) = x.m(ci, q);
                    }
                }
            }
        }
    }
}

template <class S>
FeatureMap<S> conv2d_forward(const FeatureMap<S>& x, const Param<S>& w, const Param<S>& b,
                             int stride, Conv2dCache<S>& cache) {
    const int out_h = (x.height + 2 - 3) / stride + 1;
    const int out_w = (x.width + 2 - 3) / stride + 1;
    im2col_3x3(x, stride, cache.col, out_h, out_w);
    cache.in_channels = x.channels;
    cache.in_h = x.height;
    cache.in_w = x.width;
    cache.out_h = out_h;
    cache.out_w = out_w;

    FeatureMap<S> y(static_cast<int>(w.value.rows()), out_h, out_w);
    y.m.noalias() = w.value * cache.col;
    y.m.colwise() += b.value.col(0);
    return y;
}

// Accumulates dW/db into the params; writes the input gradient into gx when
// non-null (skip for first layers whose input is data).
template <class S>
void conv2d_backward(const MatX<S>& gy, const Conv2dCache<S>& cache, int stride, Param<S>& w,
                     Param<S>& b, FeatureMap<S>* gx) {
    w.grad.noalias() += gy * cache.col.transpose();
    b.grad.col(0) += gy.rowwise().sum();
    if (!gx) return;

    MatX<S> gcol = w.value.transpose() * gy; // (ic*9) x P
    gx->channels = cache.in_channels;
    gx->height = cache.in_h;
    gx->width = cache.in_w;
    gx->m = MatX<S>::Zero(cache.in_channels, static_cast<long>(cache.in_h) * cache.in_w);
    for (int oy = 0; oy < cache.out_h; ++oy) {
        for (int ox = 0; ox < cache.out_w; ++ox) {
            const long p = static_cast<long>(oy) * cache.out_w + ox;
            for (int ky = 0; ky < 3; ++ky) {
                const int y = oy * stride + ky - 1;
                if (y < 0 || y >= cache.in_h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int x0 = ox * stride + kx - 1;
                    if (x0 < 0 || x0 >= cache.in_w) continue;
                    const long q = static_cast<long>(y) * cache.in_w + x0;
                    for (int ci = 0; ci < cache.in_channels; ++ci) {
                        gx->m(ci, q) += gcol(static_cast<long>(ci) * 9 + ky * 3 + kx, p);
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 2x pixel shuffle (sub-pixel rearrange): (4C, H, W) -> (C, 2H, 2W) with
// out(c, 2y+dy, 2x+dx) = in(4c + 2dy + dx, y, x).
// ---------------------------------------------------------------------------

template <class S>
FeatureMap<S> pixel_shuffle_forward(const FeatureMap<S>& x) {
    const int oc = x.channels / 4, ih = x.height, iw = x.width;
    FeatureMap<S> y(oc, ih * 2, iw * 2);
    for (int c = 0; c < oc; ++c) {
        for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
                const int ci = c * 4 + dy * 2 + dx;
                for (int yy = 0; yy < ih; ++yy) {
                    const long src = static_cast<long>(yy) * iw;
                    const long dst = static_cast<long>(2 * yy + dy) * (2 * iw) + dx;
                    for (int xx = 0; xx < iw; ++xx) {
                        y.m(c, dst + 2 * xx) = x.m(ci, src + xx);
                    }
                }
            }
        }
    }
    return y;
}

template <class S>
FeatureMap<S> pixel_shuffle_backward(const FeatureMap<S>& gy, int in_channels, int in_h, int in_w) {
    FeatureMap<S> gx(in_channels, in_h, in_w);
    const int oc = in_channels / 4;
    for (int c = 0; c < oc; ++c) {
        for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
                const int ci = c * 4 + dy * 2 + dx;
                for (int yy = 0; yy < in_h; ++yy) {
                    const long src = static_cast<long>(2 * yy + dy) * (2 * in_w) + dx;
                    const long dst = static_cast<long>(yy) * in_w;
                    for (int xx = 0; xx < in_w; ++xx) {
                        gx.m(ci, dst + xx) = gy.m(c, src + 2 * xx);
                    }
                }
            }
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

inline constexpr double kLeakySlope = 0.2;

template <class M>
void leaky_relu_inplace(M& a) {
    using S = typename M::Scalar;
    a = a.unaryExpr([](S v) { return v > S(0) ? v : S(kLeakySlope) * v; });
}

// `pre` is the pre-activation; multiplies g by the local derivative.
template <class MPre, class MGrad>
void leaky_relu_backward_inplace(const MPre& pre, MGrad& g) {
    using S = typename MGrad::Scalar;
    g = g.binaryExpr(pre, [](S gv, S xv) { return xv > S(0) ? gv : S(kLeakySlope) * gv; });
}

template <class M>
void sigmoid_inplace(M& a) {
    using S = typename M::Scalar;
    a = a.unaryExpr([](S v) { return S(1) / (S(1) + std::exp(-v)); });
}

// `post` is the sigmoid output.
template <class MPost, class MGrad>
void sigmoid_backward_inplace(const MPost& post, MGrad& g) {
    using S = typename MGrad::Scalar;
    g = g.binaryExpr(post, [](S gv, S yv) { return gv * yv * (S(1) - yv); });
}

// ---------------------------------------------------------------------------
// Linear layer on vectors: y = W x + b.
// ---------------------------------------------------------------------------

template <class S>
VecX<S> linear_forward(const VecX<S>& x, const Param<S>& w, const Param<S>& b) {
    return w.value * x + b.value.col(0);
}

template <class S>
VecX<S> linear_backward(const VecX<S>& gy, const VecX<S>& x, Param<S>& w, Param<S>& b) {
    w.grad.noalias() += gy * x.transpose();
    b.grad.col(0) += gy;
    return w.value.transpose() * gy;
}

// Channel-major flatten (row-major over the (C, P) matrix) and its inverse.
template <class S>
VecX<S> flatten(const FeatureMap<S>& x) {
    VecX<S> v(x.m.size());
    const long pc = static_cast<long>(x.height) * x.width;
    for (int c = 0; c < x.channels; ++c) v.segment(static_cast<long>(c) * pc, pc) = x.m.row(c);
    return v;
}

template <class S>
FeatureMap<S> unflatten(const VecX<S>& v, int channels, int h, int w) {
    FeatureMap<S> x(channels, h, w);
    const long pc = static_cast<long>(h) * w;
    for (int c = 0; c < channels; ++c) x.m.row(c) = v.segment(static_cast<long>(c) * pc, pc);
    return x;
}

} // namespace mmae

#endif
