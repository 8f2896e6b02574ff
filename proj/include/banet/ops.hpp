#pragma once

// Numerical kernels shared by every stage of the network.
//
// All functions are pure: they read their inputs and return a freshly
// allocated tensor. Parallel kernels split work over output tiles only,
// so a given build produces the same bits for any thread count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "banet/parallel.hpp"
#include "banet/tensor.hpp"

namespace banet {

struct Conv2dOptions {
    std::array<int, 2> stride{1, 1};
    std::array<int, 2> pad{0, 0};
    int groups = 1;
};

struct ConvTransposeOptions {
    std::array<int, 2> stride{1, 1};
    std::array<int, 2> pad{0, 0};
};

enum class Activation { relu, relu6, sigmoid };

inline int conv_out_size(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

inline int conv_transpose_out_size(int in, int k, int stride, int pad) {
    return (in - 1) * stride - 2 * pad + k;
}

namespace detail {

constexpr int kGemmRows = 8;
constexpr int kGemmCols = 16;

// One accumulator row of a full tile, held in vector registers.
template <typename T>
struct GemmRow;
template <>
struct GemmRow<float> {
    typedef float type __attribute__((vector_size(kGemmCols * sizeof(float))));
};
template <>
struct GemmRow<double> {
    typedef double type __attribute__((vector_size(kGemmCols * sizeof(double))));
};

// out[m][p] = sum_k weights[m][k] * col[k][p], for p in [0, cols).
// Each output is accumulated from zero in ascending k; no other ordering
// is ever used, which keeps results independent of how tiles are formed.
template <typename T>
void gemm_tile(int rows, int depth, int cols, const T* weights, const T* col, std::size_t ld_col,
               T* out, std::size_t ld_out) {
    for (int m0 = 0; m0 < rows; m0 += kGemmRows) {
        const int mb = std::min(kGemmRows, rows - m0);
        for (int p0 = 0; p0 < cols; p0 += kGemmCols) {
            const int pb = std::min(kGemmCols, cols - p0);
            if (mb == kGemmRows && pb == kGemmCols) {
                using Row = typename GemmRow<T>::type;
                Row acc[kGemmRows] = {};
                const T* wrow = weights + static_cast<std::size_t>(m0) * depth;
                for (int k = 0; k < depth; ++k) {
                    Row b;
                    std::memcpy(&b, col + k * ld_col + p0, sizeof(Row));
                    for (int m = 0; m < kGemmRows; ++m)
                        acc[m] += wrow[static_cast<std::size_t>(m) * depth + k] * b;
                }
                for (int m = 0; m < kGemmRows; ++m)
                    std::memcpy(out + (m0 + m) * ld_out + p0, &acc[m], sizeof(Row));
            } else {
                T acc[kGemmRows][kGemmCols] = {};
                for (int k = 0; k < depth; ++k) {
                    const T* cr = col + k * ld_col + p0;
                    for (int m = 0; m < mb; ++m) {
                        const T a = weights[static_cast<std::size_t>(m0 + m) * depth + k];
                        for (int j = 0; j < pb; ++j) acc[m][j] += a * cr[j];
                    }
                }
                for (int m = 0; m < mb; ++m) {
                    T* o = out + (m0 + m) * ld_out + p0;
                    for (int j = 0; j < pb; ++j) o[j] = acc[m][j];
                }
            }
        }
    }
}

struct ConvGeometry {
    int kh, kw;
    int stride_h, stride_w;
    int pad_h, pad_w;
    // Input dilation: taps land on a virtual grid with (dilation - 1)
    // zeros between input samples. 1 for an ordinary convolution.
    int dilation;
    int out_h, out_w;
};

// Fills col[k][0..cols) for output positions [p0, p0 + cols) of one group.
template <typename T>
void im2col_tile(const T* in, int channels, int h, int w, const ConvGeometry& g, std::int64_t p0,
                 int cols, T* col) {
    const int taps = g.kh * g.kw;
    for (int ci = 0; ci < channels; ++ci) {
        const T* plane = in + static_cast<std::size_t>(ci) * h * w;
        for (int t = 0; t < taps; ++t) {
            const int ky = t / g.kw;
            const int kx = t % g.kw;
            T* dst = col + static_cast<std::size_t>(ci * taps + t) * cols;
            int oy = static_cast<int>(p0 / g.out_w);
            int ox = static_cast<int>(p0 % g.out_w);
            int filled = 0;
            while (filled < cols) {
                const int run = std::min(cols - filled, g.out_w - ox);
                const int iyd = oy * g.stride_h - g.pad_h + ky;
                const int iy = iyd / g.dilation;
                const bool row_ok = iyd >= 0 && iyd % g.dilation == 0 && iy < h;
                if (!row_ok) {
                    std::fill(dst + filled, dst + filled + run, T(0));
                } else {
                    const T* src = plane + static_cast<std::size_t>(iy) * w;
                    for (int r = 0; r < run; ++r) {
                        const int ixd = (ox + r) * g.stride_w - g.pad_w + kx;
                        const int ix = ixd / g.dilation;
                        dst[filled + r] =
                            (ixd >= 0 && ixd % g.dilation == 0 && ix < w) ? src[ix] : T(0);
                    }
                }
                filled += run;
                ox = 0;
                ++oy;
            }
        }
    }
}

template <typename T>
BasicTensor<T> conv_gemm(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                         std::span<const T> bias, const ConvGeometry& g, int groups) {
    const Shape is = input.shape();
    const int c_out = kernel.n();
    const int cig = is.c / groups;
    const int cog = c_out / groups;
    const int depth = cig * g.kh * g.kw;
    const std::int64_t positions = static_cast<std::int64_t>(g.out_h) * g.out_w;
    BasicTensor<T> out(Shape{is.n, c_out, g.out_h, g.out_w});

    const bool direct = g.kh == 1 && g.kw == 1 && g.stride_h == 1 && g.stride_w == 1 &&
                        g.pad_h == 0 && g.pad_w == 0 && g.dilation == 1;
    int tile = direct ? 4096 : std::max<int>(kGemmCols, (131072 / std::max(depth, 1)));
    tile = std::max(kGemmCols, tile / kGemmCols * kGemmCols);
    const std::int64_t tiles_per_plane = (positions + tile - 1) / tile;
    const std::int64_t tasks = static_cast<std::int64_t>(is.n) * groups * tiles_per_plane;

    parallel_for(tasks, [&](std::int64_t begin, std::int64_t end) {
        std::vector<T> col(direct ? 0 : static_cast<std::size_t>(depth) * tile);
        std::uint64_t multiplies = 0;
        for (std::int64_t task = begin; task < end; ++task) {
            const std::int64_t t = task % tiles_per_plane;
            const int grp = static_cast<int>((task / tiles_per_plane) % groups);
            const int b = static_cast<int>(task / tiles_per_plane / groups);
            const std::int64_t p0 = t * tile;
            const int cols = static_cast<int>(std::min<std::int64_t>(tile, positions - p0));
            const T* in_group = input.plane(b, grp * cig);
            const T* col_ptr;
            std::size_t ld_col;
            if (direct) {
                col_ptr = in_group + p0;
                ld_col = static_cast<std::size_t>(positions);
            } else {
                im2col_tile(in_group, cig, is.h, is.w, g, p0, cols, col.data());
                col_ptr = col.data();
                ld_col = static_cast<std::size_t>(cols);
            }
            T* out_ptr = out.plane(b, grp * cog) + p0;
            gemm_tile(cog, depth, cols, kernel.data().data() + static_cast<std::size_t>(grp) * cog * depth,
                      col_ptr, ld_col, out_ptr, static_cast<std::size_t>(positions));
            if (!bias.empty()) {
                for (int m = 0; m < cog; ++m) {
                    const T bv = bias[grp * cog + m];
                    T* o = out_ptr + m * positions;
                    for (int j = 0; j < cols; ++j) o[j] += bv;
                }
            }
            multiplies += static_cast<std::uint64_t>(cog) * depth * cols;
        }
        MacCounter::add(multiplies);
    });
    return out;
}

// One channel per group, one output per group: a padded-plane direct loop.
template <typename T>
BasicTensor<T> conv_depthwise(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                              std::span<const T> bias, const ConvGeometry& g) {
    const Shape is = input.shape();
    BasicTensor<T> out(Shape{is.n, is.c, g.out_h, g.out_w});
    const int ph = is.h + 2 * g.pad_h;
    const int pw = is.w + 2 * g.pad_w;
    const int taps = g.kh * g.kw;
    parallel_for(static_cast<std::int64_t>(is.n) * is.c, [&](std::int64_t begin, std::int64_t end) {
        std::vector<T> padded(static_cast<std::size_t>(ph) * pw);
        std::vector<T> acc(g.out_w);
        for (std::int64_t task = begin; task < end; ++task) {
            const int b = static_cast<int>(task / is.c);
            const int ch = static_cast<int>(task % is.c);
            std::fill(padded.begin(), padded.end(), T(0));
            const T* src = input.plane(b, ch);
            for (int y = 0; y < is.h; ++y) {
                std::copy(src + static_cast<std::size_t>(y) * is.w,
                          src + static_cast<std::size_t>(y + 1) * is.w,
                          padded.data() + static_cast<std::size_t>(y + g.pad_h) * pw + g.pad_w);
            }
            const T* k = kernel.plane(ch, 0);
            const T bv = bias.empty() ? T(0) : bias[ch];
            T* dst = out.plane(b, ch);
            for (int oy = 0; oy < g.out_h; ++oy) {
                std::fill(acc.begin(), acc.end(), T(0));
                for (int t = 0; t < taps; ++t) {
                    const int ky = t / g.kw;
                    const int kx = t % g.kw;
                    const T kv = k[t];
                    const T* row = padded.data() + static_cast<std::size_t>(oy * g.stride_h + ky) * pw + kx;
                    if (g.stride_w == 1) {
                        for (int ox = 0; ox < g.out_w; ++ox) acc[ox] += kv * row[ox];
                    } else {
                        for (int ox = 0; ox < g.out_w; ++ox) acc[ox] += kv * row[ox * g.stride_w];
                    }
                }
                T* o = dst + static_cast<std::size_t>(oy) * g.out_w;
                for (int ox = 0; ox < g.out_w; ++ox) o[ox] = acc[ox] + bv;
            }
        }
        MacCounter::add(static_cast<std::uint64_t>(end - begin) * taps * g.out_h * g.out_w);
    });
    return out;
}

} // namespace detail

/// Grouped 2D convolution with zero padding.
///
/// kernel is (c_out, c_in / groups, kh, kw); bias is empty or has c_out
/// entries.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      std::span<const T> bias, const Conv2dOptions& opt = {}) {
    const Shape is = input.shape();
    const Shape ks = kernel.shape();
    const int groups = opt.groups;
    if (groups < 1 || is.c % groups != 0 || ks.n % groups != 0) {
        throw ShapeError("conv2d: channels " + std::to_string(is.c) + " -> " +
                         std::to_string(ks.n) + " not divisible by groups " +
                         std::to_string(groups));
    }
    if (ks.c != is.c / groups) {
        throw ShapeError("conv2d: kernel " + to_string(ks) + " expects " +
                         std::to_string(ks.c * groups) + " input channels, input is " +
                         to_string(is));
    }
    if (!bias.empty() && static_cast<int>(bias.size()) != ks.n) {
        throw ShapeError("conv2d: bias has " + std::to_string(bias.size()) + " entries, expected " +
                         std::to_string(ks.n));
    }
    if (opt.stride[0] < 1 || opt.stride[1] < 1 || opt.pad[0] < 0 || opt.pad[1] < 0) {
        throw ShapeError("conv2d: stride must be positive and padding non-negative");
    }
    detail::ConvGeometry g{ks.h, ks.w, opt.stride[0], opt.stride[1], opt.pad[0], opt.pad[1], 1,
                           conv_out_size(is.h, ks.h, opt.stride[0], opt.pad[0]),
                           conv_out_size(is.w, ks.w, opt.stride[1], opt.pad[1])};
    if (is.h + 2 * opt.pad[0] < ks.h || is.w + 2 * opt.pad[1] < ks.w) {
        throw ShapeError("conv2d: kernel " + to_string(ks) + " larger than padded input " +
                         to_string(is));
    }
    if (groups == is.c && ks.n == is.c) return detail::conv_depthwise(input, kernel, bias, g);
    return detail::conv_gemm(input, kernel, bias, g, groups);
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      const BasicTensor<T>& bias, const Conv2dOptions& opt = {}) {
    return conv2d(input, kernel, bias.data(), opt);
}

/// Transposed convolution; kernel is (c_in, c_out, kh, kw).
///
/// Evaluated as the equivalent stride-1 convolution over the output grid:
/// the input is virtually dilated by the stride and the kernel flipped.
template <typename T>
BasicTensor<T> conv2d_transpose(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                                std::span<const T> bias, const ConvTransposeOptions& opt = {}) {
    const Shape is = input.shape();
    const Shape ks = kernel.shape();
    if (ks.n != is.c) {
        throw ShapeError("conv2d_transpose: kernel " + to_string(ks) + " expects " +
                         std::to_string(ks.n) + " input channels, input is " + to_string(is));
    }
    if (!bias.empty() && static_cast<int>(bias.size()) != ks.c) {
        throw ShapeError("conv2d_transpose: bias has " + std::to_string(bias.size()) +
                         " entries, expected " + std::to_string(ks.c));
    }
    if (opt.stride[0] < 1 || opt.stride[1] < 1) {
        throw ShapeError("conv2d_transpose: stride must be positive");
    }
    if (opt.pad[0] < 0 || opt.pad[1] < 0 || opt.pad[0] > ks.h - 1 || opt.pad[1] > ks.w - 1) {
        throw ShapeError("conv2d_transpose: padding must lie in [0, kernel - 1]");
    }
    const int oh = conv_transpose_out_size(is.h, ks.h, opt.stride[0], opt.pad[0]);
    const int ow = conv_transpose_out_size(is.w, ks.w, opt.stride[1], opt.pad[1]);
    if (oh < 1 || ow < 1) throw ShapeError("conv2d_transpose: empty output for " + to_string(is));

    BasicTensor<T> flipped(Shape{ks.c, ks.n, ks.h, ks.w});
    for (int ci = 0; ci < ks.n; ++ci)
        for (int co = 0; co < ks.c; ++co)
            for (int y = 0; y < ks.h; ++y)
                for (int x = 0; x < ks.w; ++x)
                    flipped(co, ci, y, x) = kernel(ci, co, ks.h - 1 - y, ks.w - 1 - x);

    detail::ConvGeometry g{ks.h, ks.w, 1, 1, ks.h - 1 - opt.pad[0], ks.w - 1 - opt.pad[1],
                           opt.stride[0], oh, ow};
    // Dilation is the same along both axes in every caller; keep the
    // geometry honest if they ever differ.
    if (opt.stride[0] != opt.stride[1]) {
        throw ShapeError("conv2d_transpose: anisotropic stride is not supported");
    }
    return detail::conv_gemm(input, flipped, bias, g, 1);
}

template <typename T>
BasicTensor<T> conv2d_transpose(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                                const BasicTensor<T>& bias, const ConvTransposeOptions& opt = {}) {
    return conv2d_transpose(input, kernel, bias.data(), opt);
}

/// Bilinear resampling with half-pixel centers and edge clamping.
template <typename T>
BasicTensor<T> bilinear_resize(const BasicTensor<T>& input, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw ShapeError("bilinear_resize: target size must be >= 1");
    }
    const Shape is = input.shape();
    if (is.h == out_h && is.w == out_w) return input;

    struct Tap {
        int i0, i1;
        T frac;
    };
    auto taps = [](int in, int out) {
        std::vector<Tap> v(out);
        const double scale = static_cast<double>(in) / out;
        for (int o = 0; o < out; ++o) {
            double src = (o + 0.5) * scale - 0.5;
            if (src < 0) src = 0;
            int i0 = static_cast<int>(std::floor(src));
            if (i0 > in - 1) i0 = in - 1;
            const int i1 = std::min(i0 + 1, in - 1);
            v[o] = Tap{i0, i1, static_cast<T>(src - i0)};
        }
        return v;
    };
    const auto ty = taps(is.h, out_h);
    const auto tx = taps(is.w, out_w);
    BasicTensor<T> out(Shape{is.n, is.c, out_h, out_w});
    parallel_for(static_cast<std::int64_t>(is.n) * is.c, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t p = b; p < e; ++p) {
            const T* src = input.plane(static_cast<int>(p / is.c), static_cast<int>(p % is.c));
            T* dst = out.plane(static_cast<int>(p / is.c), static_cast<int>(p % is.c));
            for (int y = 0; y < out_h; ++y) {
                const T* r0 = src + static_cast<std::size_t>(ty[y].i0) * is.w;
                const T* r1 = src + static_cast<std::size_t>(ty[y].i1) * is.w;
                const T fy = ty[y].frac;
                for (int x = 0; x < out_w; ++x) {
                    const T fx = tx[x].frac;
                    const T top = r0[tx[x].i0] + fx * (r0[tx[x].i1] - r0[tx[x].i0]);
                    const T bot = r1[tx[x].i0] + fx * (r1[tx[x].i1] - r1[tx[x].i0]);
                    dst[static_cast<std::size_t>(y) * out_w + x] = top + fy * (bot - top);
                }
            }
        }
    });
    return out;
}

/// Softmax over the channel axis at every (n, y, x).
template <typename T>
BasicTensor<T> softmax_axis1(const BasicTensor<T>& input) {
    const Shape s = input.shape();
    BasicTensor<T> out(s);
    const std::size_t plane = s.plane();
    for (int b = 0; b < s.n; ++b) {
        const T* src = input.plane(b, 0);
        T* dst = out.plane(b, 0);
        parallel_for(static_cast<std::int64_t>(plane), [&](std::int64_t pb, std::int64_t pe) {
            for (std::int64_t p = pb; p < pe; ++p) {
                T mx = src[p];
                for (int c = 1; c < s.c; ++c) mx = std::max(mx, src[c * plane + p]);
                T sum = 0;
                for (int c = 0; c < s.c; ++c) {
                    const T e = std::exp(src[c * plane + p] - mx);
                    dst[c * plane + p] = e;
                    sum += e;
                }
                const T inv = T(1) / sum;
                for (int c = 0; c < s.c; ++c) dst[c * plane + p] *= inv;
            }
        }, 1024);
    }
    return out;
}

/// Logistic function, evaluated so neither branch overflows. In float the
/// result is strictly inside (0, 1) for |x| <= 16 and rounds to exactly 1
/// above about 17.3, so a saturated gate selects one branch exactly.
template <typename T>
T sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind) {
    BasicTensor<T> out = input;
    auto d = out.data();
    switch (kind) {
        case Activation::relu:
            for (auto& v : d) v = std::max(v, T(0));
            break;
        case Activation::relu6:
            for (auto& v : d) v = std::min(std::max(v, T(0)), T(6));
            break;
        case Activation::sigmoid:
            for (auto& v : d) v = sigmoid(v);
            break;
    }
    return out;
}

/// out[n,c,y,x] = volume[n,c,y,x] * map[n,0,y,x].
template <typename T>
BasicTensor<T> hadamard_broadcast(const BasicTensor<T>& volume, const BasicTensor<T>& map) {
    const Shape vs = volume.shape();
    const Shape ms = map.shape();
    if (ms.c != 1 || !vs.spatially_equal(ms)) {
        throw ShapeError("hadamard_broadcast: map " + to_string(ms) +
                         " must be single-channel and match volume " + to_string(vs));
    }
    BasicTensor<T> out(vs);
    const std::size_t plane = vs.plane();
    for (int b = 0; b < vs.n; ++b) {
        const T* m = map.plane(b, 0);
        for (int c = 0; c < vs.c; ++c) {
            const T* src = volume.plane(b, c);
            T* dst = out.plane(b, c);
            for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] * m[p];
        }
    }
    return out;
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("add: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                         " differ");
    }
    BasicTensor<T> out = a;
    auto d = out.data();
    auto s = b.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
    return out;
}

/// Returns 1 - x element-wise.
template <typename T>
BasicTensor<T> complement(const BasicTensor<T>& x) {
    BasicTensor<T> out = x;
    for (auto& v : out.data()) v = T(1) - v;
    return out;
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor) {
    BasicTensor<T> out = x;
    for (auto& v : out.data()) v *= factor;
    return out;
}

/// Per-channel affine map x * scale[c] + shift[c] (folded normalization).
template <typename T>
BasicTensor<T> channel_affine(const BasicTensor<T>& x, std::span<const T> scale_c,
                              std::span<const T> shift_c) {
    const Shape s = x.shape();
    if (static_cast<int>(scale_c.size()) != s.c || static_cast<int>(shift_c.size()) != s.c) {
        throw ShapeError("channel_affine: expected " + std::to_string(s.c) + " scale/shift entries");
    }
    BasicTensor<T> out(s);
    for (int b = 0; b < s.n; ++b)
        for (int c = 0; c < s.c; ++c) {
            const T* src = x.plane(b, c);
            T* dst = out.plane(b, c);
            for (std::size_t p = 0; p < s.plane(); ++p) dst[p] = src[p] * scale_c[c] + shift_c[c];
        }
    return out;
}

template <typename T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>> parts) {
    if (parts.empty()) throw ShapeError("concat_channels: no inputs");
    Shape s = parts[0].shape();
    int channels = 0;
    for (const auto& p : parts) {
        if (!p.shape().spatially_equal(s)) {
            throw ShapeError("concat_channels: " + to_string(p.shape()) + " does not match " +
                             to_string(s));
        }
        channels += p.c();
    }
    BasicTensor<T> out(Shape{s.n, channels, s.h, s.w});
    for (int b = 0; b < s.n; ++b) {
        int offset = 0;
        for (const auto& p : parts) {
            std::copy(p.plane(b, 0), p.plane(b, 0) + p.c() * s.plane(), out.plane(b, offset));
            offset += p.c();
        }
    }
    return out;
}

template <typename T>
BasicTensor<T> concat_channels(std::initializer_list<BasicTensor<T>> parts) {
    return concat_channels(std::span<const BasicTensor<T>>(parts.begin(), parts.size()));
}

template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, int begin, int count) {
    const Shape s = x.shape();
    if (begin < 0 || count < 1 || begin + count > s.c) {
        throw ShapeError("slice_channels: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " + to_string(s));
    }
    BasicTensor<T> out(Shape{s.n, count, s.h, s.w});
    for (int b = 0; b < s.n; ++b)
        std::copy(x.plane(b, begin), x.plane(b, begin) + count * s.plane(), out.plane(b, 0));
    return out;
}

/// Zero-pads on the bottom and right to (h, w).
template <typename T>
BasicTensor<T> pad_bottom_right(const BasicTensor<T>& x, int h, int w) {
    const Shape s = x.shape();
    if (h < s.h || w < s.w) throw ShapeError("pad_bottom_right: target smaller than input");
    if (h == s.h && w == s.w) return x;
    BasicTensor<T> out(Shape{s.n, s.c, h, w});
    for (int b = 0; b < s.n; ++b)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y)
                std::copy(x.plane(b, c) + static_cast<std::size_t>(y) * s.w,
                          x.plane(b, c) + static_cast<std::size_t>(y + 1) * s.w,
                          out.plane(b, c) + static_cast<std::size_t>(y) * w);
    return out;
}

/// Keeps the top-left (h, w) window.
template <typename T>
BasicTensor<T> crop_top_left(const BasicTensor<T>& x, int h, int w) {
    const Shape s = x.shape();
    if (h > s.h || w > s.w || h < 1 || w < 1) throw ShapeError("crop_top_left: bad window");
    if (h == s.h && w == s.w) return x;
    BasicTensor<T> out(Shape{s.n, s.c, h, w});
    for (int b = 0; b < s.n; ++b)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < h; ++y)
                std::copy(x.plane(b, c) + static_cast<std::size_t>(y) * s.w,
                          x.plane(b, c) + static_cast<std::size_t>(y) * s.w + w,
                          out.plane(b, c) + static_cast<std::size_t>(y) * w);
    return out;
}

} // namespace banet
