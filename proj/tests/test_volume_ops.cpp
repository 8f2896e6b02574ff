#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "banet/volume.hpp"
#include "oracles.hpp"

using namespace banet;

namespace {

Tensor random_map(Shape s, std::uint64_t seed) { return oracle::random_tensor(s, seed, 0.0f, 1.0f); }

/// Random texture features with fr(x - k) = fl(x): the right view sees
/// each feature k columns to the left. Amplitude sets the score contrast.
std::pair<Tensor, Tensor> shifted_pair(int nc, int h, int w, int k, std::uint64_t seed, float amp = 1.0f) {
    const Tensor base = oracle::random_tensor(Shape{1, nc, h, w + k}, seed, -amp, amp);
    Tensor fl(Shape{1, nc, h, w});
    Tensor fr(Shape{1, nc, h, w});
    for (int c = 0; c < nc; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                fl(0, c, y, x) = base(0, c, y, x);
                fr(0, c, y, x) = base(0, c, y, x + k);
            }
    return {fl, fr};
}

} // namespace

TEST(Correlation, ConstantFeatures) {
    const Tensor f(Shape{1, 8, 3, 6}, 1.0f);
    const Tensor c = build_correlation(f, f, 4);
    ASSERT_EQ(c.shape(), (Shape{1, 4, 3, 6}));
    for (int d = 0; d < 4; ++d)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 6; ++x) EXPECT_EQ(c(0, d, y, x), x >= d ? 1.0f : 0.0f);
}

TEST(Correlation, MatchesLoopOracle) {
    const Tensor fl = oracle::random_tensor(Shape{1, 2, 8, 8}, 1);
    const Tensor fr = oracle::random_tensor(Shape{1, 2, 8, 8}, 2);
    const Tensor c = build_correlation(fl, fr, 4);
    const Tensor o = oracle::correlation(fl, fr, 4);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], o[i], 1e-6);
}

TEST(Correlation, OutOfRangeEntriesAreExactZeros) {
    const Tensor fl = oracle::random_tensor(Shape{2, 3, 4, 5}, 3);
    const Tensor fr = oracle::random_tensor(Shape{2, 3, 4, 5}, 4);
    const Tensor c = build_correlation(fl, fr, 5);
    for (int b = 0; b < 2; ++b)
        for (int d = 0; d < 5; ++d)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < d; ++x) EXPECT_EQ(c(b, d, y, x), 0.0f);
}

TEST(Correlation, ShiftedFeaturesPeakAtShift) {
    for (int k = 1; k <= 5; ++k) {
        const auto [fl, fr] = shifted_pair(32, 6, 40, k, 10 + k);
        const Tensor c = build_correlation(fl, fr, 8);
        for (int y = 0; y < 6; ++y)
            for (int x = 8; x < 40; ++x) {
                int best = 0;
                for (int d = 1; d < 8; ++d)
                    if (c(0, d, y, x) > c(0, best, y, x)) best = d;
                EXPECT_EQ(best, k) << "y=" << y << " x=" << x;
            }
    }
}

TEST(Correlation, SelfCorrelationColumnAndCauchySchwarz) {
    const Tensor f = oracle::random_tensor(Shape{1, 6, 4, 12}, 20);
    const Tensor c = build_correlation(f, f, 6);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 12; ++x) {
            double sq = 0;
            for (int ch = 0; ch < 6; ++ch) sq += static_cast<double>(f(0, ch, y, x)) * f(0, ch, y, x);
            EXPECT_NEAR(c(0, 0, y, x), sq / 6, 1e-6);
            for (int d = 1; d < 6 && d <= x; ++d) {
                double other = 0;
                for (int ch = 0; ch < 6; ++ch) other += static_cast<double>(f(0, ch, y, x - d)) * f(0, ch, y, x - d);
                if (other <= sq) {
                    EXPECT_LE(c(0, d, y, x), c(0, 0, y, x) + 1e-6);
                }
            }
        }
}

TEST(Correlation, BilinearInLeftFeatures) {
    const Tensor fl = oracle::random_tensor(Shape{1, 4, 5, 9}, 21);
    const Tensor fr = oracle::random_tensor(Shape{1, 4, 5, 9}, 22);
    const Tensor c = build_correlation(fl, fr, 4);
    const Tensor c3 = build_correlation(scale(fl, 3.0f), fr, 4);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c3[i], 3.0f * c[i], 1e-5 * std::max(1.0f, std::fabs(3 * c[i])));
}

TEST(Correlation, WarnsWhenLevelsExceedWidth) {
    const Tensor f = oracle::random_tensor(Shape{1, 2, 3, 4}, 23);
    Diagnostics diag;
    const Tensor c = build_correlation(f, f, 6, &diag);
    EXPECT_EQ(c.shape(), (Shape{1, 6, 3, 4}));
    ASSERT_EQ(diag.warnings.size(), 1u);
    Diagnostics quiet;
    build_correlation(f, f, 4, &quiet);
    EXPECT_TRUE(quiet.warnings.empty());
    EXPECT_THROW(build_correlation(f, Tensor(Shape{1, 2, 3, 5}), 2), ShapeError);
}

TEST(Correlation, ZeroFillFraction) {
    // Levels 0..3 over width 8 leave 0 + 1 + 2 + 3 = 6 of 32 columns empty.
    EXPECT_DOUBLE_EQ(zero_fill_fraction(8, 4), 6.0 / 32.0);
    EXPECT_DOUBLE_EQ(zero_fill_fraction(8, 1), 0.0);
}

TEST(Separate, MidpointBoundaryAndIdentity) {
    const Tensor c = oracle::random_tensor(Shape{1, 6, 4, 5}, 30);
    const auto half = separate(c, Tensor(Shape{1, 1, 4, 5}, 0.5f));
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_EQ(half.detailed[i], 0.5f * c[i]);
        EXPECT_EQ(half.smooth[i], 0.5f * c[i]);
    }
    const auto one = separate(c, Tensor(Shape{1, 1, 4, 5}, 1.0f));
    EXPECT_TRUE(one.detailed.bitwise_equal(c));
    for (float v : one.smooth.vec()) EXPECT_EQ(v, 0.0f);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Tensor cv = oracle::random_tensor(Shape{2, 5, 3, 4}, 100 + s, -10, 10);
        const auto parts = separate(cv, random_map(Shape{2, 1, 3, 4}, 200 + s));
        for (std::size_t i = 0; i < cv.size(); ++i) EXPECT_NEAR(parts.detailed[i] + parts.smooth[i], cv[i], 1e-6);
    }
    EXPECT_THROW(separate(c, Tensor(Shape{1, 1, 4, 4})), ShapeError);
}

TEST(Fuse, EqualEndpointsBoundaryAndConvexity) {
    const Tensor x = oracle::random_tensor(Shape{1, 6, 4, 5}, 31);
    const Tensor a = random_map(Shape{1, 1, 4, 5}, 32);
    const Tensor f = fuse(x, x, a);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(f[i], x[i], 1e-6);
    const Tensor y = oracle::random_tensor(Shape{1, 6, 4, 5}, 33);
    EXPECT_TRUE(fuse(x, y, Tensor(Shape{1, 1, 4, 5}, 1.0f)).bitwise_equal(x));
    const Tensor g = fuse(x, y, a);
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_GE(g[i], std::min(x[i], y[i]) - 1e-6f);
        EXPECT_LE(g[i], std::max(x[i], y[i]) + 1e-6f);
    }
    EXPECT_THROW(fuse(x, Tensor(Shape{1, 5, 4, 5}), a), ShapeError);
}

TEST(Fuse, ClosureThroughIdentityBranches) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Tensor c = oracle::random_tensor(Shape{1, 4, 3, 6}, 300 + s, -5, 5);
        const Tensor a = random_map(Shape{1, 1, 3, 6}, 400 + s);
        const auto parts = separate(c, a);
        const Tensor out = fuse(parts.detailed, parts.smooth, a);
        for (int d = 0; d < 4; ++d)
            for (int y = 0; y < 3; ++y)
                for (int x = 0; x < 6; ++x) {
                    const double av = a(0, 0, y, x);
                    EXPECT_NEAR(out(0, d, y, x), (av * av + (1 - av) * (1 - av)) * c(0, d, y, x), 1e-5);
                }
        const auto hp = separate(c, Tensor(Shape{1, 1, 3, 6}, 0.5f));
        const Tensor half = fuse(hp.detailed, hp.smooth, Tensor(Shape{1, 1, 3, 6}, 0.5f));
        for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(half[i], 0.5f * c[i], 1e-6);
    }
}

TEST(SoftArgmin, UniformVolumeGivesMidpoint) {
    const Tensor d = soft_argmin(Tensor(Shape{1, 48, 3, 4}, 0.3f));
    for (float v : d.vec()) EXPECT_NEAR(v, 23.5, 1e-5);
}

TEST(SoftArgmin, SaturatedLevel) {
    Tensor c(Shape{1, 12, 2, 2});
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) c(0, 7, y, x) = 30.0f;
    const Tensor d = soft_argmin(c);
    for (float v : d.vec()) EXPECT_NEAR(v, 7.0, 1e-4);
}

TEST(SoftArgmin, MatchesScalarOracleAndRange) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Tensor c = oracle::random_tensor(Shape{2, 7, 3, 5}, 500 + s, -6, 6);
        const Tensor d = soft_argmin(c);
        ASSERT_EQ(d.shape(), (Shape{2, 1, 3, 5}));
        for (int b = 0; b < 2; ++b)
            for (int y = 0; y < 3; ++y)
                for (int x = 0; x < 5; ++x) {
                    EXPECT_NEAR(d(b, 0, y, x), oracle::soft_argmin_at(c, b, y, x), 1e-5);
                    EXPECT_GE(d(b, 0, y, x), 0.0f);
                    EXPECT_LE(d(b, 0, y, x), 6.0f);
                }
    }
}

TEST(SoftArgmin, InvariantToPerPixelOffset) {
    const Tensor c = oracle::random_tensor(Shape{1, 9, 4, 4}, 600, -3, 3);
    Tensor shifted = c;
    for (int d = 0; d < 9; ++d)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) shifted(0, d, y, x) += 10.0f * y - 7.0f * x;
    const Tensor a = soft_argmin(c);
    const Tensor b = soft_argmin(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-5);
}

TEST(SoftArgmin, RecoversSyntheticShift) {
    for (int k = 1; k <= 8; ++k) {
        const auto [fl, fr] = shifted_pair(32, 8, 64, k, 700 + k, 6.0f);
        const Tensor d = soft_argmin(build_correlation(fl, fr, 12));
        int good = 0, total = 0;
        for (int y = 0; y < 8; ++y)
            for (int x = 12; x < 64; ++x) {
                ++total;
                if (std::fabs(d(0, 0, y, x) - k) <= 0.5f) ++good;
            }
        EXPECT_GE(good, 0.95 * total) << "k=" << k;
    }
}

TEST(ConvexUpsample, ConstantDisparity) {
    const Tensor d0(Shape{1, 1, 3, 4}, 2.5f);
    const Tensor w = oracle::random_tensor(Shape{1, 144, 3, 4}, 40, -5, 5);
    const Tensor d1 = convex_upsample(d0, w);
    ASSERT_EQ(d1.shape(), (Shape{1, 1, 12, 16}));
    for (float v : d1.vec()) EXPECT_NEAR(v, 10.0, 1e-5);
}

TEST(ConvexUpsample, CentreWeightsGiveNearestNeighbour) {
    const Tensor d0 = oracle::random_tensor(Shape{1, 1, 3, 5}, 41, 0, 10);
    Tensor w(Shape{1, 144, 3, 5});
    for (int sub = 0; sub < 16; ++sub)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 5; ++x) w(0, 4 * 16 + sub, y, x) = 30.0f;
    const Tensor d1 = convex_upsample(d0, w);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 20; ++x) EXPECT_NEAR(d1(0, 0, y, x), 4 * d0(0, 0, y / 4, x / 4), 1e-4);
}

TEST(ConvexUpsample, NeighbourIndexLayout) {
    // Only neighbour k = 5 (dy = 0, dx = +1) is selected for sub-pixel (1, 2).
    Tensor d0(Shape{1, 1, 2, 3});
    for (int x = 0; x < 3; ++x) d0(0, 0, 0, x) = static_cast<float>(x + 1);
    Tensor w(Shape{1, 144, 2, 3}, -50.0f);
    const int sub = 1 * 4 + 2;
    w(0, 5 * 16 + sub, 0, 0) = 50.0f;
    w(0, 5 * 16 + sub, 0, 2) = 50.0f;
    const Tensor d1 = convex_upsample(d0, w);
    EXPECT_NEAR(d1(0, 0, 1, 2), 4 * 2.0, 1e-4);  // cell (0,0) looks right at x=1
    EXPECT_NEAR(d1(0, 0, 1, 10), 4 * 3.0, 1e-4); // cell (0,2) clamps to itself
}

TEST(ConvexUpsample, ConvexityAndShift) {
    const Tensor d0 = oracle::random_tensor(Shape{2, 1, 4, 6}, 42, 0, 40);
    const Tensor w = oracle::random_tensor(Shape{2, 144, 4, 6}, 43, -4, 4);
    const Tensor d1 = convex_upsample(d0, w);
    for (int b = 0; b < 2; ++b)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 24; ++x) {
                float lo = 1e9f, hi = -1e9f;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const float v = d0(b, 0, std::clamp(y / 4 + dy, 0, 3), std::clamp(x / 4 + dx, 0, 5));
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                EXPECT_GE(d1(b, 0, y, x), 4 * lo);
                EXPECT_LE(d1(b, 0, y, x), 4 * hi);
            }
    Tensor moved = d0;
    for (auto& v : moved.data()) v += 1.25f;
    const Tensor d1m = convex_upsample(moved, w);
    for (std::size_t i = 0; i < d1.size(); ++i) EXPECT_NEAR(d1m[i], d1[i] + 5.0f, 1e-4);
}

TEST(ConvexUpsample, RejectsWrongChannelCount) {
    EXPECT_THROW(convex_upsample(Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{1, 143, 2, 2})), ShapeError);
    EXPECT_THROW(convex_upsample(Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{1, 144, 2, 3})), ShapeError);
}
