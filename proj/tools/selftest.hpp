#pragma once

// Checks run by `banet selftest`. Each check yields one record; the caller
// prints them as JSON lines.

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "banet/banet.hpp"

namespace selftest {

using banet::Shape;
using banet::Tensor;
using nlohmann::json;

struct Record {
    std::string check;
    bool passed = false;
    json detail;
};

inline Tensor random_tensor(Shape s, std::mt19937& rng, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> u(lo, hi);
    Tensor t(s);
    for (auto& v : t.data()) v = u(rng);
    return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return INFINITY;
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(static_cast<double>(a[i]) - b[i]));
    return m;
}

// Direct loops used as references; deliberately independent of the
// im2col and zero-extension paths in the library.

inline Tensor direct_conv(const Tensor& x, const Tensor& k, int stride, int pad, int groups) {
    const int co = k.n(), kh = k.h(), kw = k.w(), cig = x.c() / groups, cog = co / groups;
    const int ho = (x.h() + 2 * pad - kh) / stride + 1, wo = (x.w() + 2 * pad - kw) / stride + 1;
    Tensor out(Shape{x.n(), co, ho, wo});
    for (int b = 0; b < x.n(); ++b)
        for (int o = 0; o < co; ++o)
            for (int y = 0; y < ho; ++y)
                for (int xx = 0; xx < wo; ++xx) {
                    double acc = 0;
                    for (int c = 0; c < cig; ++c)
                        for (int i = 0; i < kh; ++i)
                            for (int j = 0; j < kw; ++j) {
                                const int iy = y * stride - pad + i, ix = xx * stride - pad + j;
                                if (iy >= 0 && iy < x.h() && ix >= 0 && ix < x.w())
                                    acc += static_cast<double>(k(o, c, i, j)) * x(b, (o / cog) * cig + c, iy, ix);
                            }
                    out(b, o, y, xx) = static_cast<float>(acc);
                }
    return out;
}

inline Tensor direct_correlation(const Tensor& l, const Tensor& r, int levels) {
    Tensor out(Shape{l.n(), levels, l.h(), l.w()});
    for (int b = 0; b < l.n(); ++b)
        for (int d = 0; d < levels; ++d)
            for (int y = 0; y < l.h(); ++y)
                for (int x = d; x < l.w(); ++x) {
                    double acc = 0;
                    for (int c = 0; c < l.c(); ++c) acc += static_cast<double>(l(b, c, y, x)) * r(b, c, y, x - d);
                    out(b, d, y, x) = static_cast<float>(acc / l.c());
                }
    return out;
}

inline Tensor direct_soft_argmin(const Tensor& v) {
    Tensor out(Shape{v.n(), 1, v.h(), v.w()});
    for (int b = 0; b < v.n(); ++b)
        for (int y = 0; y < v.h(); ++y)
            for (int x = 0; x < v.w(); ++x) {
                double m = -INFINITY;
                for (int d = 0; d < v.c(); ++d) m = std::max(m, static_cast<double>(v(b, d, y, x)));
                double z = 0, s = 0;
                for (int d = 0; d < v.c(); ++d) {
                    const double e = std::exp(v(b, d, y, x) - m);
                    z += e;
                    s += d * e;
                }
                out(b, 0, y, x) = static_cast<float>(s / z);
            }
    return out;
}

inline Record gradient_check(const banet::GradReport& r) {
    return {"gradient:" + r.op,
            r.passed(),
            {{"seed", r.seed}, {"max_rel_error", r.max_rel_error}, {"max_abs_error", r.max_abs_error},
             {"tolerance", banet::kGradTolerance}}};
}

inline Record tolerance_check(const std::string& name, double error, double tol) {
    return {name, error <= tol, {{"max_abs_error", error}, {"tolerance", tol}}};
}

inline std::vector<Record> oracle_checks(std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::vector<Record> out;
    double conv_err = 0;
    for (int t = 0; t < 10; ++t) {
        const int groups = t % 3 == 0 ? 2 : 1;
        const int ci = 2 * groups, co = 3 * groups, k = 1 + 2 * (t % 2), stride = 1 + t % 2;
        const Tensor x = random_tensor(Shape{1, ci, 9, 11}, rng);
        const Tensor w = random_tensor(Shape{co, ci / groups, k, k}, rng);
        const Tensor y = banet::conv2d(x, w, std::span<const float>{},
                                       banet::Conv2dOptions{{stride, stride}, {k / 2, k / 2}, groups});
        conv_err = std::max(conv_err, max_abs_diff(y, direct_conv(x, w, stride, k / 2, groups)));
    }
    out.push_back(tolerance_check("oracle:conv2d", conv_err, 1e-5));

    double corr_err = 0;
    for (int t = 0; t < 20; ++t) {
        const int nc = 1 + t % 4, h = 4 + t % 13, w = 4 + (3 * t) % 13, levels = 1 + t % 8;
        const Tensor l = random_tensor(Shape{1, nc, h, w}, rng);
        const Tensor r = random_tensor(Shape{1, nc, h, w}, rng);
        corr_err = std::max(corr_err, max_abs_diff(banet::build_correlation(l, r, levels), direct_correlation(l, r, levels)));
    }
    out.push_back(tolerance_check("oracle:correlation", corr_err, 1e-6));

    double sa_err = 0;
    for (int t = 0; t < 10; ++t) {
        const Tensor v = random_tensor(Shape{1, 12, 4, 5}, rng, -5.0f, 5.0f);
        sa_err = std::max(sa_err, max_abs_diff(banet::soft_argmin(v), direct_soft_argmin(v)));
    }
    out.push_back(tolerance_check("oracle:soft_argmin", sa_err, 1e-5));

    double sep_err = 0;
    for (int t = 0; t < 20; ++t) {
        const Tensor c = random_tensor(Shape{1, 8, 4, 6}, rng, -3.0f, 3.0f);
        const Tensor a = random_tensor(Shape{1, 1, 4, 6}, rng, 0.0f, 1.0f);
        const auto parts = banet::separate(c, a);
        sep_err = std::max(sep_err, max_abs_diff(banet::add(parts.detailed, parts.smooth), c));
        sep_err = std::max(sep_err, max_abs_diff(banet::fuse(c, c, a), c));
    }
    out.push_back(tolerance_check("oracle:separate_fuse", sep_err, 1e-6));
    return out;
}

inline std::vector<Record> format_checks(const std::filesystem::path& dir, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::vector<Record> out;
    std::uniform_real_distribution<float> u(0.0f, 250.0f);
    std::vector<float> values(31 * 17);
    for (auto& v : values) v = u(rng);
    const auto d = banet::DisparityFile::dense(31, 17, values);

    auto guarded = [&](const std::string& name, const std::function<Record()>& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({name, false, {{"exception", e.what()}}});
        }
    };

    guarded("format:pfm", [&] {
        const auto path = (dir / "selftest.pfm").string();
        banet::write_pfm(path, d);
        const auto r = banet::read_pfm(path);
        bool exact = r.values.size() == values.size();
        for (std::size_t i = 0; exact && i < values.size(); ++i)
            exact = std::bit_cast<std::uint32_t>(r.values[i]) == std::bit_cast<std::uint32_t>(values[i]);
        return Record{"format:pfm", exact, {{"bit_exact", exact}}};
    });
    guarded("format:kitti_png", [&] {
        const auto path = (dir / "selftest.png").string();
        banet::write_kitti_png(path, d);
        const auto r = banet::read_kitti_png(path);
        double worst = 0;
        for (std::size_t i = 0; i < values.size(); ++i)
            worst = std::max(worst, std::fabs(static_cast<double>(r.values[i]) - values[i]));
        return Record{"format:kitti_png", worst <= 1.0 / 512.0, {{"max_abs_error", worst}, {"tolerance", 1.0 / 512.0}}};
    });
    guarded("format:weights", [&] {
        banet::ModelConfig cfg;
        cfg.d_max = 32;
        cfg.backbone.stem_width = 4;
        cfg.backbone.widths = {4, 6, 6, 8};
        cfg.backbone.f16_width = 6;
        cfg.backbone.f8_width = 6;
        cfg.backbone.f4_width = 8;
        const auto store = banet::init_random(cfg, seed);
        const auto path = (dir / "selftest.banw").string();
        banet::save_weights(store, path);
        const bool same = banet::serialize_weights(banet::load_weights(path)) == banet::serialize_weights(store);
        // Every single-byte corruption of a small store must be rejected.
        banet::WeightStore small;
        small.insert("a.kernel", {2, 3}, random_tensor(banet::dims_to_shape({2, 3}), rng));
        small.insert("a.bias", {2}, random_tensor(banet::dims_to_shape({2}), rng));
        const auto bytes = banet::serialize_weights(small);
        int undetected = 0;
        for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
            auto bad = bytes;
            bad[pos] ^= 0x5a;
            try {
                banet::deserialize_weights(bad);
                ++undetected;
            } catch (const banet::FormatError&) {
            }
        }
        return Record{"format:weights", same && undetected == 0,
                      {{"round_trip_identical", same}, {"undetected_corruptions", undetected}}};
    });
    return out;
}

} // namespace selftest
