#pragma once

// Cost-volume operators: correlation, attention-gated separation and
// fusion, soft-argmin regression and convex 4x upsampling.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "banet/ops.hpp"

namespace banet {

/// Collects non-fatal conditions raised while running the pipeline.
struct Diagnostics {
    std::vector<std::string> warnings;
};

/// C(d, y, x) = <F_l(y, x), F_r(y, x - d)> / Nc, and 0 where x - d < 0.
///
/// The right features are zero-extended on the left so every entry is a
/// full Nc-term dot product; out-of-range entries come out as exact zeros.
template <typename T>
BasicTensor<T> build_correlation(const BasicTensor<T>& left, const BasicTensor<T>& right,
                                 int levels, Diagnostics* diag = nullptr) {
    const Shape s = left.shape();
    if (right.shape() != s) {
        throw ShapeError("build_correlation: left " + to_string(s) + " and right " +
                         to_string(right.shape()) + " differ");
    }
    if (levels < 1) throw ShapeError("build_correlation: disparity levels must be >= 1");
    if (levels > s.w && diag) {
        diag->warnings.push_back("build_correlation: " + std::to_string(levels) +
                                 " disparity levels exceed feature width " + std::to_string(s.w) +
                                 "; upper levels are mostly zero");
    }
    BasicTensor<T> out(Shape{s.n, levels, s.h, s.w});
    const int nc = s.c;
    const int padded_w = s.w + levels;
    parallel_for(static_cast<std::int64_t>(s.n) * s.h, [&](std::int64_t begin, std::int64_t end) {
        std::vector<T> right_rows(static_cast<std::size_t>(nc) * padded_w, T(0));
        std::vector<T> acc(s.w);
        for (std::int64_t task = begin; task < end; ++task) {
            const int b = static_cast<int>(task / s.h);
            const int y = static_cast<int>(task % s.h);
            for (int c = 0; c < nc; ++c) {
                const T* src = right.plane(b, c) + static_cast<std::size_t>(y) * s.w;
                std::copy(src, src + s.w, right_rows.data() + static_cast<std::size_t>(c) * padded_w + levels);
            }
            for (int d = 0; d < levels; ++d) {
                std::fill(acc.begin(), acc.end(), T(0));
                for (int c = 0; c < nc; ++c) {
                    const T* l = left.plane(b, c) + static_cast<std::size_t>(y) * s.w;
                    const T* r = right_rows.data() + static_cast<std::size_t>(c) * padded_w + levels - d;
                    for (int x = 0; x < s.w; ++x) acc[x] += l[x] * r[x];
                }
                T* dst = out.plane(b, d) + static_cast<std::size_t>(y) * s.w;
                for (int x = 0; x < s.w; ++x) dst[x] = acc[x] / static_cast<T>(nc);
            }
        }
        MacCounter::add(static_cast<std::uint64_t>(end - begin) * nc * levels * s.w);
    });
    return out;
}

/// Fraction of volume entries that fall outside the right view.
inline double zero_fill_fraction(int width, int levels) {
    if (width < 1 || levels < 1) return 0.0;
    double zeros = 0;
    for (int d = 0; d < levels; ++d) zeros += std::min(d, width);
    return zeros / (static_cast<double>(width) * levels);
}

template <typename T>
struct SeparatedVolumes {
    BasicTensor<T> detailed;
    BasicTensor<T> smooth;
};

/// Splits C into A * C and (1 - A) * C, A broadcast across disparities.
template <typename T>
SeparatedVolumes<T> separate(const BasicTensor<T>& volume, const BasicTensor<T>& attention) {
    return {hadamard_broadcast(volume, attention),
            hadamard_broadcast(volume, complement(attention))};
}

/// A * detailed + (1 - A) * smooth.
template <typename T>
BasicTensor<T> fuse(const BasicTensor<T>& detailed, const BasicTensor<T>& smooth,
                    const BasicTensor<T>& attention) {
    if (detailed.shape() != smooth.shape()) {
        throw ShapeError("fuse: detailed " + to_string(detailed.shape()) + " and smooth " +
                         to_string(smooth.shape()) + " differ");
    }
    const Shape vs = detailed.shape();
    if (attention.c() != 1 || !attention.shape().spatially_equal(vs)) {
        throw ShapeError("fuse: attention " + to_string(attention.shape()) +
                         " does not match volume " + to_string(vs));
    }
    BasicTensor<T> out(vs);
    const std::size_t plane = vs.plane();
    for (int b = 0; b < vs.n; ++b) {
        const T* a = attention.plane(b, 0);
        for (int c = 0; c < vs.c; ++c) {
            const T* dp = detailed.plane(b, c);
            const T* sp = smooth.plane(b, c);
            T* o = out.plane(b, c);
            for (std::size_t p = 0; p < plane; ++p) o[p] = a[p] * dp[p] + (T(1) - a[p]) * sp[p];
        }
    }
    return out;
}

/// Expected disparity index under a softmax over the level axis.
template <typename T>
BasicTensor<T> soft_argmin(const BasicTensor<T>& volume) {
    const BasicTensor<T> prob = softmax_axis1(volume);
    const Shape s = volume.shape();
    BasicTensor<T> out(Shape{s.n, 1, s.h, s.w});
    const std::size_t plane = s.plane();
    for (int b = 0; b < s.n; ++b) {
        T* dst = out.plane(b, 0);
        for (int d = 0; d < s.c; ++d) {
            const T* p = prob.plane(b, d);
            const T level = static_cast<T>(d);
            for (std::size_t i = 0; i < plane; ++i) dst[i] += level * p[i];
        }
        // Rounding can push the sum a hair past the top level.
        const T top = static_cast<T>(s.c - 1);
        for (std::size_t i = 0; i < plane; ++i) dst[i] = std::clamp(dst[i], T(0), top);
    }
    return out;
}

constexpr int kUpsampleFactor = 4;
constexpr int kUpsampleNeighbors = 9;
constexpr int kUpsampleWeightChannels = kUpsampleNeighbors * kUpsampleFactor * kUpsampleFactor;

/// Full-resolution disparity as a convex combination of the 3x3 coarse
/// neighbourhood, scaled by 4 into full-resolution pixel units.
///
/// Weight channel (k * 16 + sy * 4 + sx) is the logit of neighbour k
/// (row-major over dy, dx in {-1, 0, 1}) for sub-pixel (sy, sx).
/// Neighbours outside the map clamp to the nearest valid cell.
template <typename T>
BasicTensor<T> convex_upsample(const BasicTensor<T>& coarse, const BasicTensor<T>& weights) {
    const Shape cs = coarse.shape();
    const Shape ws = weights.shape();
    if (cs.c != 1) throw ShapeError("convex_upsample: disparity must be single-channel");
    if (ws.c != kUpsampleWeightChannels || !ws.spatially_equal(cs)) {
        throw ShapeError("convex_upsample: weights " + to_string(ws) + " must be (n, " +
                         std::to_string(kUpsampleWeightChannels) + ", h, w) matching " +
                         to_string(cs));
    }
    constexpr int f = kUpsampleFactor;
    BasicTensor<T> out(Shape{cs.n, 1, cs.h * f, cs.w * f});
    const std::size_t plane = cs.plane();
    parallel_for(static_cast<std::int64_t>(cs.n) * cs.h, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t task = begin; task < end; ++task) {
            const int b = static_cast<int>(task / cs.h);
            const int y = static_cast<int>(task % cs.h);
            const T* d0 = coarse.plane(b, 0);
            const T* wb = weights.plane(b, 0);
            T* dst = out.plane(b, 0);
            for (int x = 0; x < cs.w; ++x) {
                T neighbor[kUpsampleNeighbors];
                for (int k = 0; k < kUpsampleNeighbors; ++k) {
                    const int ny = std::clamp(y + k / 3 - 1, 0, cs.h - 1);
                    const int nx = std::clamp(x + k % 3 - 1, 0, cs.w - 1);
                    neighbor[k] = static_cast<T>(f) * d0[static_cast<std::size_t>(ny) * cs.w + nx];
                }
                const std::size_t pos = static_cast<std::size_t>(y) * cs.w + x;
                for (int sub = 0; sub < f * f; ++sub) {
                    T logits[kUpsampleNeighbors];
                    T mx = -std::numeric_limits<T>::infinity();
                    for (int k = 0; k < kUpsampleNeighbors; ++k) {
                        logits[k] = wb[(static_cast<std::size_t>(k) * f * f + sub) * plane + pos];
                        mx = std::max(mx, logits[k]);
                    }
                    T sum = 0;
                    T acc = 0;
                    T lo = neighbor[0];
                    T hi = neighbor[0];
                    for (int k = 0; k < kUpsampleNeighbors; ++k) {
                        const T e = std::exp(logits[k] - mx);
                        sum += e;
                        acc += e * neighbor[k];
                        lo = std::min(lo, neighbor[k]);
                        hi = std::max(hi, neighbor[k]);
                    }
                    const int oy = y * f + sub / f;
                    const int ox = x * f + sub % f;
                    // Rounding can step outside the hull of the neighbours.
                    dst[static_cast<std::size_t>(oy) * cs.w * f + ox] = std::clamp(acc / sum, lo, hi);
                }
            }
        }
    });
    return out;
}

} // namespace banet
