#pragma once

// Analytic gradients of the volume operators, checked against central
// finite differences of the library's own forward code run in double.
//
// Every check contracts the operator output with a fixed upstream tensor
// u, L = <u, op(x)>, and compares dL/dx against (L(x + h) - L(x - h)) / 2h
// on sampled input coordinates.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "banet/volume.hpp"

namespace banet {

// ---------------------------------------------------------------------------
// Analytic gradients

/// dd0/dC for d0 = sum_d d * softmax(C)(d): g(d) = p(d) (d - d0) u.
inline TensorD grad_soft_argmin(const TensorD& volume, const TensorD& upstream) {
    const Shape s = volume.shape();
    if (upstream.shape() != Shape{s.n, 1, s.h, s.w}) {
        throw ShapeError("grad_soft_argmin: upstream must be " + to_string(Shape{s.n, 1, s.h, s.w}));
    }
    const TensorD p = softmax_axis1(volume);
    TensorD g(s);
    for (int b = 0; b < s.n; ++b)
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) {
                double d0 = 0;
                for (int d = 0; d < s.c; ++d) d0 += d * p(b, d, y, x);
                for (int d = 0; d < s.c; ++d) g(b, d, y, x) = p(b, d, y, x) * (d - d0) * upstream(b, 0, y, x);
            }
    return g;
}

/// Linear map over the disparity axis, applied independently per pixel:
/// G(X)(d) = sum_e M[d][e] X(e). Stands in for an aggregation branch.
struct DisparityMix {
    int levels = 0;
    std::vector<double> matrix;  // levels x levels, row-major

    static DisparityMix identity(int levels) {
        DisparityMix m{levels, std::vector<double>(static_cast<std::size_t>(levels) * levels, 0.0)};
        for (int d = 0; d < levels; ++d) m.matrix[static_cast<std::size_t>(d) * levels + d] = 1.0;
        return m;
    }

    TensorD apply(const TensorD& x, bool transpose = false) const {
        const Shape s = x.shape();
        if (s.c != levels) throw ShapeError("DisparityMix: level count mismatch");
        TensorD out(s);
        for (int b = 0; b < s.n; ++b)
            for (int d = 0; d < levels; ++d)
                for (int e = 0; e < levels; ++e) {
                    const double m = transpose ? matrix[static_cast<std::size_t>(e) * levels + d]
                                               : matrix[static_cast<std::size_t>(d) * levels + e];
                    const double* src = x.plane(b, e);
                    double* dst = out.plane(b, d);
                    for (std::size_t p = 0; p < s.plane(); ++p) dst[p] += m * src[p];
                }
        return out;
    }
};

/// y = A G_d(A C) + (1 - A) G_s((1 - A) C), the separate -> aggregate ->
/// fuse composite with linear branches.
inline TensorD separate_fuse_composite(const TensorD& volume, const TensorD& attention,
                                       const DisparityMix& gd, const DisparityMix& gs) {
    const auto parts = separate(volume, attention);
    return fuse(gd.apply(parts.detailed), gs.apply(parts.smooth), attention);
}

struct SeparateFuseGrad {
    TensorD volume;     // dL/dC
    TensorD attention;  // dL/dA, summed over disparities
};

inline SeparateFuseGrad grad_separate_fuse(const TensorD& volume, const TensorD& attention,
                                           const TensorD& upstream, const DisparityMix& gd,
                                           const DisparityMix& gs) {
    const Shape s = volume.shape();
    if (upstream.shape() != s) throw ShapeError("grad_separate_fuse: upstream must match the volume");
    const TensorD inv = complement(attention);
    const TensorD gd_fwd = gd.apply(hadamard_broadcast(volume, attention));
    const TensorD gs_fwd = gs.apply(hadamard_broadcast(volume, inv));
    const TensorD gd_adj = gd.apply(hadamard_broadcast(upstream, attention), true);
    const TensorD gs_adj = gs.apply(hadamard_broadcast(upstream, inv), true);
    SeparateFuseGrad g{TensorD(s), TensorD(attention.shape())};
    for (int b = 0; b < s.n; ++b)
        for (int d = 0; d < s.c; ++d)
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x) {
                    const double a = attention(b, 0, y, x);
                    g.volume(b, d, y, x) = a * gd_adj(b, d, y, x) + (1 - a) * gs_adj(b, d, y, x);
                    g.attention(b, 0, y, x) += upstream(b, d, y, x) * gd_fwd(b, d, y, x) +
                                               volume(b, d, y, x) * gd_adj(b, d, y, x) -
                                               upstream(b, d, y, x) * gs_fwd(b, d, y, x) -
                                               volume(b, d, y, x) * gs_adj(b, d, y, x);
                }
    return g;
}

/// Gradient through the sigmoid gate: A = sigmoid(z) feeding the
/// separate -> fuse composite. Returns dL/dz.
inline TensorD grad_attention_gate(const TensorD& volume, const TensorD& logits, const TensorD& upstream,
                                   const DisparityMix& gd, const DisparityMix& gs) {
    const TensorD a = activation(logits, Activation::sigmoid);
    TensorD dz = grad_separate_fuse(volume, a, upstream, gd, gs).attention;
    for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= a[i] * (1 - a[i]);
    return dz;
}

struct CorrelationGrad {
    TensorD left;
    TensorD right;
};

/// dF_l(x) = sum_d u(d, x) F_r(x - d) / Nc; dF_r(x) = sum_d u(d, x + d) F_l(x + d) / Nc.
inline CorrelationGrad grad_correlation(const TensorD& left, const TensorD& right, const TensorD& upstream) {
    const Shape s = left.shape();
    if (right.shape() != s || upstream.n() != s.n || upstream.h() != s.h || upstream.w() != s.w) {
        throw ShapeError("grad_correlation: inconsistent shapes");
    }
    const int levels = upstream.c();
    const double inv_nc = 1.0 / s.c;
    CorrelationGrad g{TensorD(s), TensorD(s)};
    for (int b = 0; b < s.n; ++b)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x)
                    for (int d = 0; d < levels; ++d) {
                        if (x - d >= 0) g.left(b, c, y, x) += upstream(b, d, y, x) * right(b, c, y, x - d) * inv_nc;
                        if (x + d < s.w) g.right(b, c, y, x) += upstream(b, d, y, x + d) * left(b, c, y, x + d) * inv_nc;
                    }
    return g;
}

// ---------------------------------------------------------------------------
// Finite-difference checks

inline constexpr double kFdStep = 1e-6;
inline constexpr double kGradTolerance = 1e-5;
/// Denominator floor for relative error; below this magnitude the error
/// is effectively absolute, keeping FD round-off (~1e-9) from dominating.
inline constexpr double kRelativeFloor = 1e-3;
inline constexpr int kSampledCoordinates = 200;

struct GradReport {
    std::string op;
    std::uint64_t seed = 0;
    double max_rel_error = 0;
    double max_abs_error = 0;
    int evaluations = 0;

    bool passed() const { return max_rel_error <= kGradTolerance; }
};

struct FdOptions {
    /// Added to every analytic gradient entry; a test hook for the
    /// sensitivity of the check.
    double perturbation = 0;
    int coordinates = kSampledCoordinates;
};

inline const std::vector<std::string>& registered_grad_ops() {
    static const std::vector<std::string> ops{"soft_argmin", "separate_fuse", "correlation", "attention_gate"};
    return ops;
}

namespace detail {

/// A differentiable instance: flat inputs, a scalar objective and its
/// analytic gradient over the same flat layout.
struct GradInstance {
    std::vector<double> inputs;
    std::function<double(const std::vector<double>&)> objective;
    std::vector<double> analytic;
};

inline double contract(const TensorD& u, const TensorD& y) {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += u[i] * y[i];
    return s;
}

inline TensorD random_tensor(Shape s, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    TensorD t(s);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

inline DisparityMix random_mix(int levels, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    DisparityMix m{levels, std::vector<double>(static_cast<std::size_t>(levels) * levels)};
    for (auto& v : m.matrix) v = dist(rng);
    return m;
}

inline std::vector<double> concat(const TensorD& a, const TensorD& b) {
    std::vector<double> v(a.vec());
    v.insert(v.end(), b.vec().begin(), b.vec().end());
    return v;
}

inline TensorD slice(const std::vector<double>& flat, std::size_t offset, Shape s) {
    return TensorD(s, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                                          flat.begin() + static_cast<std::ptrdiff_t>(offset + s.numel())));
}

inline GradInstance make_instance(const std::string& op, std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 17);
    const int levels = 6;
    const Shape vol{1, levels, 5, 8};
    const Shape map{1, 1, 5, 8};
    GradInstance inst;
    if (op == "soft_argmin") {
        const TensorD c = random_tensor(vol, rng, -2.0, 2.0);
        const TensorD u = random_tensor(map, rng, -1.0, 1.0);
        inst.inputs = c.vec();
        inst.objective = [=](const std::vector<double>& x) { return contract(u, soft_argmin(TensorD(vol, x))); };
        inst.analytic = grad_soft_argmin(c, u).vec();
    } else if (op == "separate_fuse") {
        const TensorD c = random_tensor(vol, rng, -2.0, 2.0);
        const TensorD a = random_tensor(map, rng, 0.05, 0.95);
        const TensorD u = random_tensor(vol, rng, -1.0, 1.0);
        const DisparityMix gd = random_mix(levels, rng);
        const DisparityMix gs = random_mix(levels, rng);
        inst.inputs = concat(c, a);
        inst.objective = [=](const std::vector<double>& x) {
            return contract(u, separate_fuse_composite(slice(x, 0, vol), slice(x, vol.numel(), map), gd, gs));
        };
        const auto g = grad_separate_fuse(c, a, u, gd, gs);
        inst.analytic = concat(g.volume, g.attention);
    } else if (op == "correlation") {
        const Shape feat{1, 3, 5, 8};
        const TensorD fl = random_tensor(feat, rng, -1.0, 1.0);
        const TensorD fr = random_tensor(feat, rng, -1.0, 1.0);
        const TensorD u = random_tensor(vol, rng, -1.0, 1.0);
        inst.inputs = concat(fl, fr);
        inst.objective = [=](const std::vector<double>& x) {
            return contract(u, build_correlation(slice(x, 0, feat), slice(x, feat.numel(), feat), levels));
        };
        const auto g = grad_correlation(fl, fr, u);
        inst.analytic = concat(g.left, g.right);
    } else if (op == "attention_gate") {
        const TensorD c = random_tensor(vol, rng, -2.0, 2.0);
        const TensorD z = random_tensor(map, rng, -3.0, 3.0);
        const TensorD u = random_tensor(vol, rng, -1.0, 1.0);
        const DisparityMix gd = random_mix(levels, rng);
        const DisparityMix gs = random_mix(levels, rng);
        inst.inputs = z.vec();
        inst.objective = [=](const std::vector<double>& x) {
            return contract(u, separate_fuse_composite(c, activation(TensorD(map, x), Activation::sigmoid), gd, gs));
        };
        inst.analytic = grad_attention_gate(c, z, u, gd, gs).vec();
        // The gate alone has only 40 coordinates; check the volume path too.
        const auto gv = grad_separate_fuse(c, activation(z, Activation::sigmoid), u, gd, gs).volume;
        const std::size_t nz = inst.inputs.size();
        inst.inputs.insert(inst.inputs.end(), c.vec().begin(), c.vec().end());
        inst.analytic.insert(inst.analytic.end(), gv.vec().begin(), gv.vec().end());
        inst.objective = [=](const std::vector<double>& x) {
            const TensorD zz(map, std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nz)));
            return contract(u, separate_fuse_composite(slice(x, nz, vol), activation(zz, Activation::sigmoid), gd, gs));
        };
    } else {
        throw Error("fd_check: unregistered op '" + op + "'");
    }
    return inst;
}

} // namespace detail

/// Central-difference check of one registered op on the instance drawn
/// from seed. Deterministic in (op, seed, options).
inline GradReport fd_check(const std::string& op, std::uint64_t seed, const FdOptions& opt = {}) {
    detail::GradInstance inst = detail::make_instance(op, seed);
    std::vector<std::size_t> coords(inst.inputs.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ull);
    const std::size_t take = std::min<std::size_t>(coords.size(), static_cast<std::size_t>(opt.coordinates));
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, coords.size() - 1);
        std::swap(coords[i], coords[pick(rng)]);
    }
    GradReport r;
    r.op = op;
    r.seed = seed;
    std::vector<double> x = inst.inputs;
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t k = coords[i];
        const double orig = x[k];
        x[k] = orig + kFdStep;
        const double up = inst.objective(x);
        x[k] = orig - kFdStep;
        const double down = inst.objective(x);
        x[k] = orig;
        r.evaluations += 2;
        const double numeric = (up - down) / (2 * kFdStep);
        const double analytic = inst.analytic[k] + opt.perturbation;
        const double abs_err = std::fabs(analytic - numeric);
        const double rel_err = abs_err / std::max({std::fabs(analytic), std::fabs(numeric), kRelativeFloor});
        r.max_abs_error = std::max(r.max_abs_error, abs_err);
        r.max_rel_error = std::max(r.max_rel_error, rel_err);
    }
    return r;
}

/// Every registered op over seeds [0, instances).
inline std::vector<GradReport> run_grad_suite(int instances = 20, const FdOptions& opt = {}) {
    std::vector<GradReport> reports;
    for (const auto& op : registered_grad_ops())
        for (int s = 0; s < instances; ++s) reports.push_back(fd_check(op, static_cast<std::uint64_t>(s), opt));
    return reports;
}

} // namespace banet
