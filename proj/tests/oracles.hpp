#pragma once

// Reference implementations for tests. Each is written directly from its
// defining formula with plain loops and shares no code with the library
// kernels beyond the tensor container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "banet/tensor.hpp"

namespace oracle {

using banet::Shape;
using banet::Tensor;
using banet::TensorD;

inline Tensor random_tensor(Shape s, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    std::uniform_real_distribution<float> dist(lo, hi);
    Tensor t(s);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

/// Six-nested-loop direct convolution, accumulated in double.
inline Tensor conv2d(const Tensor& x, const Tensor& k, const std::vector<float>& bias, int sh, int sw,
                     int ph, int pw, int groups) {
    const int n = x.n(), ci = x.c(), h = x.h(), w = x.w();
    const int co = k.n(), kh = k.h(), kw = k.w();
    const int ho = (h + 2 * ph - kh) / sh + 1;
    const int wo = (w + 2 * pw - kw) / sw + 1;
    const int cig = ci / groups, cog = co / groups;
    Tensor out(Shape{n, co, ho, wo});
    for (int b = 0; b < n; ++b)
        for (int o = 0; o < co; ++o)
            for (int y = 0; y < ho; ++y)
                for (int xx = 0; xx < wo; ++xx) {
                    double acc = bias.empty() ? 0.0 : bias[o];
                    const int g = o / cog;
                    for (int c = 0; c < cig; ++c)
                        for (int i = 0; i < kh; ++i)
                            for (int j = 0; j < kw; ++j) {
                                const int iy = y * sh - ph + i;
                                const int ix = xx * sw - pw + j;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                acc += static_cast<double>(k(o, c, i, j)) * x(b, g * cig + c, iy, ix);
                            }
                    out(b, o, y, xx) = static_cast<float>(acc);
                }
    return out;
}

/// Scatter form of the transposed convolution: every input pixel stamps
/// the kernel onto the output grid, then the border pad is cropped.
/// Kernel layout (c_in, c_out, kh, kw).
inline Tensor conv2d_transpose(const Tensor& x, const Tensor& k, const std::vector<float>& bias, int stride,
                               int pad) {
    const int n = x.n(), ci = x.c(), h = x.h(), w = x.w();
    const int co = k.c(), kh = k.h(), kw = k.w();
    const int full_h = (h - 1) * stride + kh;
    const int full_w = (w - 1) * stride + kw;
    std::vector<double> acc(static_cast<std::size_t>(n) * co * full_h * full_w, 0.0);
    auto at = [&](int b, int o, int y, int xx) -> double& {
        return acc[((static_cast<std::size_t>(b) * co + o) * full_h + y) * full_w + xx];
    };
    for (int b = 0; b < n; ++b)
        for (int c = 0; c < ci; ++c)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx)
                    for (int o = 0; o < co; ++o)
                        for (int i = 0; i < kh; ++i)
                            for (int j = 0; j < kw; ++j)
                                at(b, o, y * stride + i, xx * stride + j) +=
                                    static_cast<double>(x(b, c, y, xx)) * k(c, o, i, j);
    const int ho = full_h - 2 * pad;
    const int wo = full_w - 2 * pad;
    Tensor out(Shape{n, co, ho, wo});
    for (int b = 0; b < n; ++b)
        for (int o = 0; o < co; ++o)
            for (int y = 0; y < ho; ++y)
                for (int xx = 0; xx < wo; ++xx)
                    out(b, o, y, xx) = static_cast<float>(at(b, o, y + pad, xx + pad) + (bias.empty() ? 0.0 : bias[o]));
    return out;
}

/// Bilinear sample with half-pixel centers and edge clamping, one output
/// pixel at a time.
inline double bilinear_at(const Tensor& x, int b, int c, int oy, int ox, int out_h, int out_w) {
    const double sy = std::max(0.0, (oy + 0.5) * x.h() / out_h - 0.5);
    const double sx = std::max(0.0, (ox + 0.5) * x.w() / out_w - 0.5);
    const int y0 = std::min(static_cast<int>(std::floor(sy)), x.h() - 1);
    const int x0 = std::min(static_cast<int>(std::floor(sx)), x.w() - 1);
    const int y1 = std::min(y0 + 1, x.h() - 1);
    const int x1 = std::min(x0 + 1, x.w() - 1);
    const double fy = sy - y0;
    const double fx = sx - x0;
    return (1 - fy) * ((1 - fx) * x(b, c, y0, x0) + fx * x(b, c, y0, x1)) +
           fy * ((1 - fx) * x(b, c, y1, x0) + fx * x(b, c, y1, x1));
}

/// C(d, y, x) = (1/Nc) sum_c Fl(c, y, x) Fr(c, y, x - d), zero when x < d.
template <typename T>
banet::BasicTensor<T> correlation(const banet::BasicTensor<T>& fl, const banet::BasicTensor<T>& fr, int levels) {
    banet::BasicTensor<T> out(Shape{fl.n(), levels, fl.h(), fl.w()});
    for (int b = 0; b < fl.n(); ++b)
        for (int d = 0; d < levels; ++d)
            for (int y = 0; y < fl.h(); ++y)
                for (int x = 0; x < fl.w(); ++x) {
                    if (x - d < 0) continue;
                    double s = 0;
                    for (int c = 0; c < fl.c(); ++c) s += static_cast<double>(fl(b, c, y, x)) * fr(b, c, y, x - d);
                    out(b, d, y, x) = static_cast<T>(s / fl.c());
                }
    return out;
}

/// Per-pixel expectation of the level index under softmax over levels.
inline double soft_argmin_at(const Tensor& c, int b, int y, int x) {
    double mx = -1e300;
    for (int d = 0; d < c.c(); ++d) mx = std::max(mx, static_cast<double>(c(b, d, y, x)));
    double z = 0, e = 0;
    for (int d = 0; d < c.c(); ++d) {
        const double p = std::exp(c(b, d, y, x) - mx);
        z += p;
        e += d * p;
    }
    return e / z;
}

inline double dot(const Tensor& a, const Tensor& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

} // namespace oracle
