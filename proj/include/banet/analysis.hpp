#pragma once

// Analytic MAC accounting and the wall-clock benchmark harness.
//
// One MAC is one multiply-accumulate. Convolutions count every kernel tap
// at every output position, padded taps included. Transposed convolutions
// are counted as the equivalent stride-1 convolution over their output
// grid, which is how the kernels evaluate them. Element-wise work,
// softmax, sigmoid and resizing count as zero.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "banet/model.hpp"

namespace banet {

inline std::uint64_t conv_macs(int c_in, int c_out, int kh, int kw, int groups, int h_out, int w_out) {
    return static_cast<std::uint64_t>(c_out) * (c_in / groups) * kh * kw * h_out * w_out;
}

inline std::uint64_t conv_transpose_macs(int c_in, int c_out, int kh, int kw, int h_out, int w_out) {
    return static_cast<std::uint64_t>(c_out) * c_in * kh * kw * h_out * w_out;
}

inline std::uint64_t correlation_macs(int channels, int levels, int h, int w) {
    return static_cast<std::uint64_t>(channels) * levels * h * w;
}

struct LayerMacs {
    std::string stage;
    std::string name;
    std::uint64_t macs = 0;
    std::uint64_t params = 0;
};

struct StageMacs {
    std::string name;
    std::uint64_t macs = 0;
    std::uint64_t params = 0;
};

struct MacBreakdown {
    int height = 0;
    int width = 0;
    int padded_height = 0;
    int padded_width = 0;
    std::vector<StageMacs> stages;
    std::vector<LayerMacs> layers;
    std::uint64_t total_macs = 0;
    std::uint64_t total_params = 0;
};

namespace detail {

class MacTally {
public:
    explicit MacTally(MacBreakdown& out) : out_(out) {}

    void stage(std::string name, int multiplicity = 1) {
        stage_ = std::move(name);
        multiplicity_ = multiplicity;
        out_.stages.push_back({stage_, 0, 0});
    }

    void layer(const std::string& name, std::uint64_t macs, std::uint64_t params) {
        const std::uint64_t m = macs * static_cast<std::uint64_t>(multiplicity_);
        out_.layers.push_back({stage_, name, m, params});
        out_.stages.back().macs += m;
        out_.stages.back().params += params;
        out_.total_macs += m;
        out_.total_params += params;
    }

    // Same-padded k x k conv; returns the output size.
    std::pair<int, int> conv(const std::string& name, int c_in, int c_out, int k, int groups, int h,
                             int w, int stride = 1) {
        const int ho = conv_out_size(h, k, stride, k / 2);
        const int wo = conv_out_size(w, k, stride, k / 2);
        layer(name, conv_macs(c_in, c_out, k, k, groups, ho, wo),
              static_cast<std::uint64_t>(c_out) * (c_in / groups) * k * k + c_out);
        return {ho, wo};
    }

    // Folded norm after the previous conv: scale and shift per channel.
    void affine(int c) {
        out_.layers.back().params += 2ull * c;
        out_.stages.back().params += 2ull * c;
        out_.total_params += 2ull * c;
    }

    std::pair<int, int> inverted_residual(const std::string& name, int c_in, int c_out, int stride,
                                          int h, int w) {
        const int hidden = 4 * c_in;
        conv(name + ".expand", c_in, hidden, 1, 1, h, w);
        affine(hidden);
        const auto [ho, wo] = conv(name + ".dw", hidden, hidden, 3, hidden, h, w, stride);
        affine(hidden);
        conv(name + ".project", hidden, c_out, 1, 1, ho, wo);
        affine(c_out);
        return {ho, wo};
    }

    std::pair<int, int> up_block(const std::string& name, int c_in, int c_out, int lateral_in, int h,
                                 int w) {
        const int ho = conv_transpose_out_size(h, 4, 2, 1);
        const int wo = conv_transpose_out_size(w, 4, 2, 1);
        layer(name + ".deconv", conv_transpose_macs(c_in, c_out, 4, 4, ho, wo),
              static_cast<std::uint64_t>(c_in) * c_out * 16 + c_out);
        if (lateral_in > 0) conv(name + ".lateral", lateral_in, c_out, 1, 1, ho, wo);
        conv(name + ".conv", c_out, c_out, 3, 1, ho, wo);
        return {ho, wo};
    }

    void branch(const std::string& name, int levels, int h4, int w4) {
        const auto [w4c, w8c, w16c] = kBranchWidths;
        conv(name + ".proj", levels, w4c, 3, 1, h4, w4);
        for (int i = 0; i < kBranchBlocks[0]; ++i)
            inverted_residual(name + ".enc4.block" + std::to_string(i), w4c, w4c, 1, h4, w4);
        const auto [h8, w8] = inverted_residual(name + ".down8", w4c, w8c, 2, h4, w4);
        for (int i = 0; i < kBranchBlocks[1]; ++i)
            inverted_residual(name + ".enc8.block" + std::to_string(i), w8c, w8c, 1, h8, w8);
        const auto [h16, w16] = inverted_residual(name + ".down16", w8c, w16c, 2, h8, w8);
        for (int i = 0; i < kBranchBlocks[2]; ++i)
            inverted_residual(name + ".enc16.block" + std::to_string(i), w16c, w16c, 1, h16, w16);
        up_block(name + ".up8", w16c, w8c, 0, h16, w16);
        up_block(name + ".up4", w8c, w4c, 0, h8, w8);
        conv(name + ".head", w4c, levels, 3, 1, h4, w4);
    }

private:
    MacBreakdown& out_;
    std::string stage_;
    int multiplicity_ = 1;
};

} // namespace detail

/// Per-layer and per-stage MACs of one forward pass at h x w. The graph is
/// counted at the padded resolution it actually runs at; the features
/// stage covers both views, parameters are counted once.
inline MacBreakdown count_macs(const ModelConfig& cfg, int h, int w) {
    cfg.validate();
    MacBreakdown out;
    out.height = h;
    out.width = w;
    out.padded_height = (h + cfg.pad_multiple - 1) / cfg.pad_multiple * cfg.pad_multiple;
    out.padded_width = (w + cfg.pad_multiple - 1) / cfg.pad_multiple * cfg.pad_multiple;
    detail::MacTally t(out);
    const auto& bb = cfg.backbone;

    t.stage("features", 2);
    auto [ch, cw] = t.conv("backbone.stem", 3, bb.stem_width, 3, 1, out.padded_height, out.padded_width, 2);
    int c = bb.stem_width;
    std::array<std::pair<int, int>, 4> sizes;
    for (int s = 0; s < 4; ++s) {
        for (int b = 0; b < bb.blocks[s]; ++b) {
            std::tie(ch, cw) = t.inverted_residual(
                "backbone.stage" + std::to_string(s + 1) + ".block" + std::to_string(b), c,
                bb.widths[s], b == 0 ? 2 : 1, ch, cw);
            c = bb.widths[s];
        }
        sizes[s] = {ch, cw};
    }
    t.up_block("backbone.up16", bb.widths[3], bb.f16_width, bb.widths[2], sizes[3].first, sizes[3].second);
    t.up_block("backbone.up8", bb.f16_width, bb.f8_width, bb.widths[1], sizes[2].first, sizes[2].second);
    t.up_block("backbone.up4", bb.f8_width, bb.f4_width, bb.widths[0], sizes[1].first, sizes[1].second);

    const int h4 = sizes[0].first;
    const int w4 = sizes[0].second;
    const int levels = cfg.levels();

    t.stage("correlation");
    t.layer("correlation", correlation_macs(bb.f4_width, levels, h4, w4), 0);

    if (cfg.bilateral) {
        t.stage("attention");
        if (cfg.attention == AttentionMode::scale_aware) {
            t.conv("attention.f16", bb.f16_width, kAttentionWidth, 3, 1, h4, w4);
            t.conv("attention.f8", bb.f8_width, kAttentionWidth, 3, 1, h4, w4);
            t.conv("attention.f4", bb.f4_width, kAttentionWidth, 3, 1, h4, w4);
            t.conv("attention.fuse", 3 * kAttentionWidth, 1, 3, 1, h4, w4);
        } else {
            t.conv("attention.f4", bb.f4_width, kAttentionWidth, 3, 1, h4, w4);
            t.conv("attention.fuse", kAttentionWidth, 1, 3, 1, h4, w4);
        }
        t.stage("aggregation_detailed");
        t.branch(branch_prefix(cfg, false), levels, h4, w4);
        t.stage("aggregation_smooth");
        t.branch(branch_prefix(cfg, true), levels, h4, w4);
    } else {
        t.stage("aggregation");
        t.branch(branch_prefix(cfg, false), levels, h4, w4);
    }

    t.stage("upsample_head");
    t.conv("upmask.conv1", bb.f4_width, kUpmaskHidden, 3, 1, h4, w4);
    t.conv("upmask.conv2", kUpmaskHidden, kUpsampleWeightChannels, 3, 1, h4, w4);
    return out;
}

// ---------------------------------------------------------------------------
// Benchmark harness

struct LatencyStats {
    double median_ms = 0;
    double p95_ms = 0;
};

inline LatencyStats latency_stats(std::vector<double> samples) {
    if (samples.empty()) return {};
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    LatencyStats s;
    s.median_ms = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
    const std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    s.p95_ms = samples[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

struct BenchReport {
    int height = 0;
    int width = 0;
    int warmup = 0;
    int iters = 0;
    int threads = 1;
    std::string mode;  // "single-thread" or "parallel"
    LatencyStats features;
    LatencyStats correlation;
    LatencyStats aggregation;
    LatencyStats regression;
    LatencyStats end_to_end;
    std::vector<StageTimes> samples;
    std::vector<double> end_to_end_samples;
};

/// Times `run` (one forward pass) iters times after warmup passes. Stage
/// times come from the pass's own diagnostics; end-to-end time wraps the
/// whole call.
inline BenchReport bench(const std::function<ForwardOutput()>& run, int warmup, int iters) {
    if (iters < 1) throw Error("bench: iters must be >= 1");
    BenchReport r;
    r.warmup = std::max(0, warmup);
    r.iters = iters;
    r.threads = num_threads();
    r.mode = r.threads > 1 ? "parallel" : "single-thread";
    for (int i = 0; i < r.warmup; ++i) run();
    std::vector<double> f, c, a, g;
    for (int i = 0; i < iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const ForwardOutput out = run();
        const double e2e =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const StageTimes& st = out.diagnostics.times;
        r.samples.push_back(st);
        r.end_to_end_samples.push_back(e2e);
        f.push_back(st.features_ms);
        c.push_back(st.correlation_ms);
        a.push_back(st.aggregation_ms);
        g.push_back(st.regression_ms);
        if (i == 0) {
            r.height = out.d1.h();
            r.width = out.d1.w();
        }
    }
    r.features = latency_stats(f);
    r.correlation = latency_stats(c);
    r.aggregation = latency_stats(a);
    r.regression = latency_stats(g);
    r.end_to_end = latency_stats(r.end_to_end_samples);
    return r;
}

/// Seeded random pair of normalized-range views for benchmarking.
inline std::pair<Tensor, Tensor> random_views(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    Tensor l(Shape{1, 3, h, w});
    Tensor r(Shape{1, 3, h, w});
    for (auto& v : l.data()) v = dist(rng);
    for (auto& v : r.data()) v = dist(rng);
    return {std::move(l), std::move(r)};
}

} // namespace banet
