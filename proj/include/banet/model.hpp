#pragma once

// Full stereo graph: siamese features, correlation volume, attention,
// bilateral (or single-branch) aggregation, soft-argmin and convex
// upsampling.

#include <chrono>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "banet/blocks.hpp"
#include "banet/volume.hpp"
#include "banet/weights.hpp"

namespace banet {

enum class AttentionMode { scale_aware, quarter_only };

struct ModelConfig {
    int d_max = 192;
    BackboneConfig backbone{};
    AttentionMode attention = AttentionMode::scale_aware;
    /// false runs one aggregation branch on the raw volume, no attention.
    bool bilateral = true;
    int pad_multiple = 32;

    int levels() const { return d_max / 4; }

    void validate() const {
        if (d_max < 4 || d_max % 4 != 0) {
            throw Error("ModelConfig: d_max must be a positive multiple of 4, got " +
                        std::to_string(d_max));
        }
        const auto& b = backbone;
        for (int v : {b.stem_width, b.f16_width, b.f8_width, b.f4_width, b.widths[0], b.widths[1],
                      b.widths[2], b.widths[3], b.blocks[0], b.blocks[1], b.blocks[2], b.blocks[3]}) {
            if (v < 1) throw Error("ModelConfig: backbone widths and block counts must be >= 1");
        }
        if (pad_multiple != 32) throw Error("ModelConfig: pad_multiple must be 32");
    }
};

/// Configurations of the three 2D ablation rows.
inline ModelConfig baseline_config() {
    ModelConfig c;
    c.bilateral = false;
    c.attention = AttentionMode::quarter_only;
    return c;
}
inline ModelConfig bilateral_config() {
    ModelConfig c;
    c.attention = AttentionMode::quarter_only;
    return c;
}
inline ModelConfig full_config() { return ModelConfig{}; }

constexpr int kUpmaskHidden = 64;

struct ModelParams {
    BackboneParams backbone;
    std::optional<AttentionParams> attention;
    AggregationBranchParams detailed;  // the only branch when !bilateral
    std::optional<AggregationBranchParams> smooth;
    ConvParams upmask1;
    ConvParams upmask2;
};

inline std::string branch_prefix(const ModelConfig& cfg, bool smooth) {
    if (!cfg.bilateral) return "agg";
    return smooth ? "agg_smooth" : "agg_detailed";
}

/// Walks the graph in canonical order, pulling every parameter from src.
inline ModelParams build_model_params(const ModelConfig& cfg, const ParamSource& src) {
    cfg.validate();
    ModelParams p;
    p.backbone = make_backbone(src, "backbone", cfg.backbone);
    if (cfg.bilateral) {
        p.attention = make_attention(src, "attention", cfg.backbone,
                                     cfg.attention == AttentionMode::scale_aware);
    }
    p.detailed = make_aggregation_branch(src, branch_prefix(cfg, false), cfg.levels());
    if (cfg.bilateral) p.smooth = make_aggregation_branch(src, branch_prefix(cfg, true), cfg.levels());
    p.upmask1 = make_conv(src, "upmask.conv1", kUpmaskHidden, cfg.backbone.f4_width, 3);
    p.upmask2 = make_conv(src, "upmask.conv2", kUpsampleWeightChannels, kUpmaskHidden, 3);
    return p;
}

struct ParamSpec {
    std::string name;
    std::vector<int> dims;
    ParamRole role;
};

/// Every parameter the configuration demands, in canonical order.
inline std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
    std::vector<ParamSpec> specs;
    build_model_params(cfg, [&](const ParamRequest& r) {
        specs.push_back({r.name, r.dims, r.role});
        return Tensor(Shape{});
    });
    return specs;
}

namespace detail {

inline float unit_uniform(std::mt19937_64& rng) {
    return static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

} // namespace detail

/// Seeded synthesis: kernels He-uniform over fan-in, biases uniform in
/// +-1/sqrt(fan_in), norm scale 1 and shift 0.
inline WeightStore init_random(const ModelConfig& cfg, std::uint64_t seed) {
    WeightStore store;
    std::mt19937_64 rng(seed);
    build_model_params(cfg, [&](const ParamRequest& r) {
        Tensor t(dims_to_shape(r.dims));
        const float fan = static_cast<float>(std::max(r.fan_in, 1));
        switch (r.role) {
            case ParamRole::kernel: {
                const float bound = std::sqrt(6.0f / fan);
                for (auto& v : t.data()) v = (2 * detail::unit_uniform(rng) - 1) * bound;
                break;
            }
            case ParamRole::bias: {
                const float bound = 1.0f / std::sqrt(fan);
                for (auto& v : t.data()) v = (2 * detail::unit_uniform(rng) - 1) * bound;
                break;
            }
            case ParamRole::scale:
                for (auto& v : t.data()) v = 1.0f;
                break;
            case ParamRole::shift:
                break;
        }
        store.insert(r.name, r.dims, t);
        return Tensor(Shape{});
    });
    return store;
}

/// Checks the store against the configuration: nothing missing, nothing
/// extra, every shape exact. Throws ParameterError naming the first
/// offending path.
inline void validate_store(const WeightStore& store, const ModelConfig& cfg) {
    const auto specs = param_specs(cfg);
    std::set<std::string> expected;
    for (const auto& s : specs) {
        expected.insert(s.name);
        if (!store.contains(s.name)) throw ParameterError(s.name, "missing parameter");
        const auto& e = store.at(s.name);
        if (e.dims != s.dims) {
            auto fmt = [](const std::vector<int>& d) {
                std::string out = "[";
                for (std::size_t i = 0; i < d.size(); ++i) out += (i ? "," : "") + std::to_string(d[i]);
                return out + "]";
            };
            throw ParameterError(s.name, "shape " + fmt(e.dims) + " does not match expected " + fmt(s.dims));
        }
    }
    for (const auto& e : store.entries()) {
        if (!expected.count(e.name)) throw ParameterError(e.name, "unexpected parameter");
    }
}

inline ModelParams bind_params(const WeightStore& store, const ModelConfig& cfg) {
    validate_store(store, cfg);
    return build_model_params(cfg, [&](const ParamRequest& r) { return store.at(r.name).tensor; });
}

struct StageRecord {
    std::string name;
    Shape shape;
    double elapsed_ms;
};

/// Timing groups used by the benchmark harness.
struct StageTimes {
    double features_ms = 0;
    double correlation_ms = 0;
    double aggregation_ms = 0;  // attention + separation + branches + fusion
    double regression_ms = 0;   // soft-argmin + weight head + upsampling
    double total_ms = 0;
};

struct ForwardDiagnostics {
    double zero_fill_fraction = 0;
    std::vector<StageRecord> stages;
    StageTimes times;
    std::vector<std::string> warnings;
};

struct ForwardOutput {
    Tensor d1;                         // (n, 1, H, W), full-resolution pixels
    Tensor d0;                         // (n, 1, ceil(H/4), ceil(W/4)), level units
    std::optional<Tensor> attention;   // absent without bilateral aggregation
    ForwardDiagnostics diagnostics;
};

/// Bilateral aggregation (or the single branch) on a raw volume.
/// attention must be provided iff the configuration is bilateral.
inline Tensor aggregate_volume(const Tensor& volume, const std::optional<Tensor>& attention,
                               const ModelParams& p, const ModelConfig& cfg) {
    if (!cfg.bilateral) return aggregate_branch(volume, p.detailed);
    if (!attention || !p.smooth) throw Error("aggregate_volume: bilateral mode needs attention and both branches");
    const auto parts = separate(volume, *attention);
    return fuse(aggregate_branch(parts.detailed, p.detailed),
                aggregate_branch(parts.smooth, *p.smooth), *attention);
}

inline Tensor upsample_weights(const Tensor& f4, const ModelParams& p) {
    return apply_conv(activation(apply_conv(f4, p.upmask1), Activation::relu), p.upmask2);
}

namespace detail {

class StageClock {
public:
    StageClock() : last_(std::chrono::steady_clock::now()) {}
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
        return ms;
    }

private:
    std::chrono::steady_clock::time_point last_;
};

} // namespace detail

inline ForwardOutput forward(const Tensor& left, const Tensor& right, const ModelParams& p,
                             const ModelConfig& cfg) {
    cfg.validate();
    if (left.shape() != right.shape()) {
        throw ShapeError("forward: left view " + to_string(left.shape()) + " and right view " +
                         to_string(right.shape()) + " differ");
    }
    if (left.c() != 3) throw ShapeError("forward: views must have 3 channels, got " + to_string(left.shape()));
    if (left.h() < 32 || left.w() < 32) {
        throw ShapeError("forward: views must be at least 32x32, got " + to_string(left.shape()));
    }
    const int h = left.h();
    const int w = left.w();
    const int ph = (h + cfg.pad_multiple - 1) / cfg.pad_multiple * cfg.pad_multiple;
    const int pw = (w + cfg.pad_multiple - 1) / cfg.pad_multiple * cfg.pad_multiple;

    ForwardOutput out;
    auto& diag = out.diagnostics;
    detail::StageClock total;
    detail::StageClock clock;
    auto record = [&](const char* name, const Tensor& t) {
        const double ms = clock.lap();
        diag.stages.push_back({name, t.shape(), ms});
        return ms;
    };

    const Features fl = extract_features(pad_bottom_right(left, ph, pw), p.backbone);
    const Features fr = extract_features(pad_bottom_right(right, ph, pw), p.backbone);
    diag.times.features_ms = record("features", fl.f4);

    Diagnostics corr_diag;
    const Tensor volume = build_correlation(fl.f4, fr.f4, cfg.levels(), &corr_diag);
    diag.warnings = std::move(corr_diag.warnings);
    diag.zero_fill_fraction = zero_fill_fraction(volume.w(), cfg.levels());
    diag.times.correlation_ms = record("correlation", volume);

    std::optional<Tensor> attention;
    if (cfg.bilateral) {
        attention = cfg.attention == AttentionMode::scale_aware
                        ? scale_aware_attention(fl.f4, fl.f8, fl.f16, *p.attention)
                        : scale_unaware_attention(fl.f4, *p.attention);
        diag.times.aggregation_ms += record("attention", *attention);
    }
    const Tensor aggregated = aggregate_volume(volume, attention, p, cfg);
    diag.times.aggregation_ms += record("aggregation", aggregated);

    const Tensor d0 = soft_argmin(aggregated);
    const Tensor d1 = convex_upsample(d0, upsample_weights(fl.f4, p));
    const int qh = (h + 3) / 4;
    const int qw = (w + 3) / 4;
    out.d1 = crop_top_left(d1, h, w);
    out.d0 = crop_top_left(d0, qh, qw);
    if (attention) out.attention = crop_top_left(*attention, qh, qw);
    diag.times.regression_ms = record("regression", out.d1);
    diag.times.total_ms = total.lap();
    return out;
}

inline ForwardOutput forward(const Tensor& left, const Tensor& right, const WeightStore& store,
                             const ModelConfig& cfg) {
    return forward(left, right, bind_params(store, cfg), cfg);
}

} // namespace banet
