#pragma once

// Learned building blocks: inverted residuals, the feature backbone with
// its up-sampling decoder, the attention heads and the 2D aggregation
// branch. Parameter structs are filled through a ParamSource so the same
// builder code defines names, shapes and bindings for the whole graph.

#include <functional>
#include <string>
#include <vector>

#include "banet/ops.hpp"

namespace banet {

enum class ParamRole { kernel, bias, scale, shift };

inline const char* to_string(ParamRole r) {
    switch (r) {
        case ParamRole::kernel: return "kernel";
        case ParamRole::bias: return "bias";
        case ParamRole::scale: return "scale";
        case ParamRole::shift: return "shift";
    }
    return "?";
}

struct ParamRequest {
    std::string name;
    std::vector<int> dims;
    ParamRole role;
    int fan_in;
};

/// Maps a dims vector (rank 1..4) onto a 4-axis shape, padding with 1s.
inline Shape dims_to_shape(const std::vector<int>& dims) {
    Shape s;
    int* slots[4] = {&s.n, &s.c, &s.h, &s.w};
    for (std::size_t i = 0; i < dims.size() && i < 4; ++i) *slots[i] = dims[i];
    return s;
}

using ParamSource = std::function<Tensor(const ParamRequest&)>;

struct ConvParams {
    Tensor kernel;
    Tensor bias;
};

struct AffineParams {
    Tensor scale;
    Tensor shift;
};

struct InvertedResidualParams {
    int c_in = 0;
    int c_out = 0;
    int stride = 1;
    ConvParams expand;
    AffineParams expand_norm;
    ConvParams depthwise;
    AffineParams depthwise_norm;
    ConvParams project;
    AffineParams project_norm;

    int expanded() const { return 4 * c_in; }
    bool has_residual() const { return stride == 1 && c_in == c_out; }
};

/// Transpose conv (4x4, stride 2), optional lateral 1x1 on the skip
/// input, then a 3x3 conv.
struct UpBlockParams {
    ConvParams deconv;
    bool has_lateral = false;
    ConvParams lateral;
    ConvParams conv;
};

struct BackboneConfig {
    int stem_width = 32;
    std::array<int, 4> widths{24, 32, 96, 160};
    std::array<int, 4> blocks{2, 3, 3, 3};
    int f16_width = 96;
    int f8_width = 64;
    int f4_width = 48;
};

struct BackboneParams {
    ConvParams stem;
    std::array<std::vector<InvertedResidualParams>, 4> stages;
    UpBlockParams up16;
    UpBlockParams up8;
    UpBlockParams up4;
};

struct Features {
    Tensor f4;
    Tensor f8;
    Tensor f16;
};

constexpr int kAttentionWidth = 32;

struct AttentionParams {
    bool scale_aware = true;
    ConvParams f16;  // unused when !scale_aware
    ConvParams f8;   // unused when !scale_aware
    ConvParams f4;
    ConvParams fuse;
};

constexpr int kBranchWidths[3] = {32, 64, 128};
constexpr int kBranchBlocks[3] = {4, 6, 8};

struct AggregationBranchParams {
    int volume_channels = 48;
    ConvParams proj;
    std::vector<InvertedResidualParams> quarter;
    InvertedResidualParams down8;
    std::vector<InvertedResidualParams> eighth;
    InvertedResidualParams down16;
    std::vector<InvertedResidualParams> sixteenth;
    UpBlockParams up8;
    UpBlockParams up4;
    ConvParams head;
};

// ---------------------------------------------------------------------------
// Parameter builders

inline ConvParams make_conv(const ParamSource& src, const std::string& prefix, int c_out, int c_in,
                            int k, int groups = 1) {
    const int fan_in = (c_in / groups) * k * k;
    ConvParams p;
    p.kernel = src({prefix + ".kernel", {c_out, c_in / groups, k, k}, ParamRole::kernel, fan_in});
    p.bias = src({prefix + ".bias", {c_out}, ParamRole::bias, fan_in});
    return p;
}

inline ConvParams make_deconv(const ParamSource& src, const std::string& prefix, int c_in,
                              int c_out) {
    // Each output of a 4x4 stride-2 transpose conv sees 2x2 taps per channel.
    const int fan_in = c_in * 4;
    ConvParams p;
    p.kernel = src({prefix + ".kernel", {c_in, c_out, 4, 4}, ParamRole::kernel, fan_in});
    p.bias = src({prefix + ".bias", {c_out}, ParamRole::bias, fan_in});
    return p;
}

inline AffineParams make_affine(const ParamSource& src, const std::string& prefix, int c) {
    AffineParams p;
    p.scale = src({prefix + ".scale", {c}, ParamRole::scale, 1});
    p.shift = src({prefix + ".shift", {c}, ParamRole::shift, 1});
    return p;
}

inline InvertedResidualParams make_inverted_residual(const ParamSource& src,
                                                     const std::string& prefix, int c_in,
                                                     int c_out, int stride) {
    InvertedResidualParams p;
    p.c_in = c_in;
    p.c_out = c_out;
    p.stride = stride;
    const int hidden = p.expanded();
    p.expand = make_conv(src, prefix + ".expand", hidden, c_in, 1);
    p.expand_norm = make_affine(src, prefix + ".expand_norm", hidden);
    p.depthwise = make_conv(src, prefix + ".dw", hidden, hidden, 3, hidden);
    p.depthwise_norm = make_affine(src, prefix + ".dw_norm", hidden);
    p.project = make_conv(src, prefix + ".project", c_out, hidden, 1);
    p.project_norm = make_affine(src, prefix + ".project_norm", c_out);
    return p;
}

inline UpBlockParams make_up_block(const ParamSource& src, const std::string& prefix, int c_in,
                                   int c_out, int lateral_in) {
    UpBlockParams p;
    p.deconv = make_deconv(src, prefix + ".deconv", c_in, c_out);
    if (lateral_in > 0) {
        p.has_lateral = true;
        p.lateral = make_conv(src, prefix + ".lateral", c_out, lateral_in, 1);
    }
    p.conv = make_conv(src, prefix + ".conv", c_out, c_out, 3);
    return p;
}

inline BackboneParams make_backbone(const ParamSource& src, const std::string& prefix,
                                    const BackboneConfig& cfg) {
    BackboneParams p;
    p.stem = make_conv(src, prefix + ".stem", cfg.stem_width, 3, 3);
    int c = cfg.stem_width;
    for (int s = 0; s < 4; ++s) {
        for (int b = 0; b < cfg.blocks[s]; ++b) {
            const std::string name =
                prefix + ".stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
            p.stages[s].push_back(
                make_inverted_residual(src, name, c, cfg.widths[s], b == 0 ? 2 : 1));
            c = cfg.widths[s];
        }
    }
    p.up16 = make_up_block(src, prefix + ".up16", cfg.widths[3], cfg.f16_width, cfg.widths[2]);
    p.up8 = make_up_block(src, prefix + ".up8", cfg.f16_width, cfg.f8_width, cfg.widths[1]);
    p.up4 = make_up_block(src, prefix + ".up4", cfg.f8_width, cfg.f4_width, cfg.widths[0]);
    return p;
}

inline AttentionParams make_attention(const ParamSource& src, const std::string& prefix,
                                      const BackboneConfig& cfg, bool scale_aware) {
    AttentionParams p;
    p.scale_aware = scale_aware;
    if (scale_aware) {
        p.f16 = make_conv(src, prefix + ".f16", kAttentionWidth, cfg.f16_width, 3);
        p.f8 = make_conv(src, prefix + ".f8", kAttentionWidth, cfg.f8_width, 3);
    }
    p.f4 = make_conv(src, prefix + ".f4", kAttentionWidth, cfg.f4_width, 3);
    p.fuse = make_conv(src, prefix + ".fuse", 1, (scale_aware ? 3 : 1) * kAttentionWidth, 3);
    return p;
}

inline AggregationBranchParams make_aggregation_branch(const ParamSource& src,
                                                       const std::string& prefix,
                                                       int volume_channels) {
    AggregationBranchParams p;
    p.volume_channels = volume_channels;
    const auto [w4, w8, w16] = kBranchWidths;
    p.proj = make_conv(src, prefix + ".proj", w4, volume_channels, 3);
    for (int i = 0; i < kBranchBlocks[0]; ++i)
        p.quarter.push_back(make_inverted_residual(
            src, prefix + ".enc4.block" + std::to_string(i), w4, w4, 1));
    p.down8 = make_inverted_residual(src, prefix + ".down8", w4, w8, 2);
    for (int i = 0; i < kBranchBlocks[1]; ++i)
        p.eighth.push_back(make_inverted_residual(
            src, prefix + ".enc8.block" + std::to_string(i), w8, w8, 1));
    p.down16 = make_inverted_residual(src, prefix + ".down16", w8, w16, 2);
    for (int i = 0; i < kBranchBlocks[2]; ++i)
        p.sixteenth.push_back(make_inverted_residual(
            src, prefix + ".enc16.block" + std::to_string(i), w16, w16, 1));
    p.up8 = make_up_block(src, prefix + ".up8", w16, w8, 0);
    p.up4 = make_up_block(src, prefix + ".up4", w8, w4, 0);
    p.head = make_conv(src, prefix + ".head", volume_channels, w4, 3);
    return p;
}

// ---------------------------------------------------------------------------
// Forward functions

inline Tensor apply_conv(const Tensor& x, const ConvParams& p, int stride = 1, int groups = 1) {
    const int pad = p.kernel.h() / 2;
    return conv2d(x, p.kernel, p.bias, {.stride = {stride, stride}, .pad = {pad, pad}, .groups = groups});
}

inline Tensor apply_affine(const Tensor& x, const AffineParams& p) {
    return channel_affine(x, p.scale.data(), p.shift.data());
}

/// pw-expand -> relu6 -> depthwise -> relu6 -> pw-project (linear),
/// with an identity skip when stride is 1 and widths match.
inline Tensor inverted_residual(const Tensor& x, const InvertedResidualParams& p) {
    if (x.c() != p.c_in) {
        throw ShapeError("inverted_residual: input has " + std::to_string(x.c()) +
                         " channels, block expects " + std::to_string(p.c_in));
    }
    Tensor y = activation(apply_affine(apply_conv(x, p.expand), p.expand_norm), Activation::relu6);
    y = activation(apply_affine(apply_conv(y, p.depthwise, p.stride, p.expanded()), p.depthwise_norm),
                   Activation::relu6);
    y = apply_affine(apply_conv(y, p.project), p.project_norm);
    if (p.has_residual()) y = add(y, x);
    return y;
}

inline Tensor up_block(const Tensor& x, const Tensor& skip, const UpBlockParams& p) {
    Tensor y = activation(conv2d_transpose(x, p.deconv.kernel, p.deconv.bias,
                                           {.stride = {2, 2}, .pad = {1, 1}}),
                          Activation::relu);
    if (y.h() != skip.h() || y.w() != skip.w()) {
        throw ShapeError("up_block: upsampled " + to_string(y.shape()) +
                         " does not align with skip " + to_string(skip.shape()));
    }
    y = add(y, p.has_lateral ? apply_conv(skip, p.lateral) : skip);
    return activation(apply_conv(y, p.conv), Activation::relu);
}

/// Multi-scale features at 1/4, 1/8 and 1/16 resolution. Height and width
/// must already be multiples of 32.
inline Features extract_features(const Tensor& image, const BackboneParams& p) {
    if (image.c() != 3) {
        throw ShapeError("extract_features: expected a 3-channel image, got " +
                         to_string(image.shape()));
    }
    if (image.h() % 32 != 0 || image.w() % 32 != 0) {
        throw ShapeError("extract_features: spatial size of " + to_string(image.shape()) +
                         " is not a multiple of 32");
    }
    Tensor x = activation(apply_conv(image, p.stem, 2), Activation::relu6);
    std::array<Tensor, 4> encoded;
    for (int s = 0; s < 4; ++s) {
        for (const auto& block : p.stages[s]) x = inverted_residual(x, block);
        encoded[s] = x;
    }
    Features f;
    f.f16 = up_block(encoded[3], encoded[2], p.up16);
    f.f8 = up_block(f.f16, encoded[1], p.up8);
    f.f4 = up_block(f.f8, encoded[0], p.up4);
    return f;
}

/// Attention map from 1/4, 1/8 and 1/16 features: coarse features are
/// bilinearly scaled to 1/4, projected per scale, concatenated, then
/// reduced to one sigmoid channel.
inline Tensor scale_aware_attention(const Tensor& f4, const Tensor& f8, const Tensor& f16,
                                    const AttentionParams& p) {
    if (!p.scale_aware) throw ShapeError("scale_aware_attention: parameters lack f8/f16 heads");
    if (f8.h() * 2 != f4.h() || f8.w() * 2 != f4.w() || f16.h() * 4 != f4.h() ||
        f16.w() * 4 != f4.w() || f8.n() != f4.n() || f16.n() != f4.n()) {
        throw ShapeError("scale_aware_attention: inconsistent scales " + to_string(f4.shape()) +
                         ", " + to_string(f8.shape()) + ", " + to_string(f16.shape()));
    }
    const Tensor up16 = bilinear_resize(f16, f4.h(), f4.w());
    const Tensor up8 = bilinear_resize(f8, f4.h(), f4.w());
    const Tensor s = concat_channels({apply_conv(up16, p.f16), apply_conv(up8, p.f8), apply_conv(f4, p.f4)});
    return activation(apply_conv(s, p.fuse), Activation::sigmoid);
}

/// Same head driven by the 1/4 features only.
inline Tensor scale_unaware_attention(const Tensor& f4, const AttentionParams& p) {
    if (p.fuse.kernel.c() != kAttentionWidth) {
        throw ShapeError("scale_unaware_attention: fuse conv expects " +
                         std::to_string(p.fuse.kernel.c()) + " channels");
    }
    return activation(apply_conv(apply_conv(f4, p.f4), p.fuse), Activation::sigmoid);
}

/// 2D aggregation of a (n, D', H/4, W/4) volume; output has the same shape.
inline Tensor aggregate_branch(const Tensor& volume, const AggregationBranchParams& p) {
    if (volume.c() != p.volume_channels) {
        throw ShapeError("aggregate_branch: volume has " + std::to_string(volume.c()) +
                         " disparity channels, branch expects " +
                         std::to_string(p.volume_channels));
    }
    if (volume.h() % 4 != 0 || volume.w() % 4 != 0) {
        throw ShapeError("aggregate_branch: spatial size of " + to_string(volume.shape()) +
                         " is not divisible by 4");
    }
    Tensor x = activation(apply_conv(volume, p.proj), Activation::relu6);
    for (const auto& b : p.quarter) x = inverted_residual(x, b);
    const Tensor e4 = x;
    x = inverted_residual(x, p.down8);
    for (const auto& b : p.eighth) x = inverted_residual(x, b);
    const Tensor e8 = x;
    x = inverted_residual(x, p.down16);
    for (const auto& b : p.sixteenth) x = inverted_residual(x, b);
    x = up_block(x, e8, p.up8);
    x = up_block(x, e4, p.up4);
    return apply_conv(x, p.head);
}

enum class LayerKind { projection, inverted_residual, up_block, head };

struct LayerInfo {
    LayerKind kind;
    int c_in;
    int c_out;
    int stride;
};

/// Declared layer sequence of an aggregation branch, derived from its
/// parameters.
inline std::vector<LayerInfo> branch_layer_sequence(const AggregationBranchParams& p) {
    std::vector<LayerInfo> seq;
    seq.push_back({LayerKind::projection, p.proj.kernel.c(), p.proj.kernel.n(), 1});
    auto push_ir = [&](const InvertedResidualParams& b) {
        seq.push_back({LayerKind::inverted_residual, b.c_in, b.c_out, b.stride});
    };
    for (const auto& b : p.quarter) push_ir(b);
    push_ir(p.down8);
    for (const auto& b : p.eighth) push_ir(b);
    push_ir(p.down16);
    for (const auto& b : p.sixteenth) push_ir(b);
    for (const auto* u : {&p.up8, &p.up4})
        seq.push_back({LayerKind::up_block, u->deconv.kernel.n(), u->deconv.kernel.c(), 2});
    seq.push_back({LayerKind::head, p.head.kernel.c(), p.head.kernel.n(), 1});
    return seq;
}

/// True when the sequence is 1 projection, 4+1+6+1+8 inverted residuals
/// with widths 32/64/128, two up-blocks and one head.
inline bool branch_topology_ok(const std::vector<LayerInfo>& seq, int volume_channels) {
    if (seq.size() != 24) return false;
    std::size_t i = 0;
    if (seq[i].kind != LayerKind::projection || seq[i].c_in != volume_channels ||
        seq[i].c_out != kBranchWidths[0])
        return false;
    ++i;
    auto run = [&](int count, int c_in, int c_out, int stride) {
        for (int k = 0; k < count; ++k, ++i) {
            if (seq[i].kind != LayerKind::inverted_residual || seq[i].c_in != c_in ||
                seq[i].c_out != c_out || seq[i].stride != stride)
                return false;
            c_in = c_out;
        }
        return true;
    };
    if (!run(kBranchBlocks[0], 32, 32, 1) || !run(1, 32, 64, 2) || !run(kBranchBlocks[1], 64, 64, 1) ||
        !run(1, 64, 128, 2) || !run(kBranchBlocks[2], 128, 128, 1))
        return false;
    if (seq[i].kind != LayerKind::up_block || seq[i].c_in != 128 || seq[i].c_out != 64) return false;
    ++i;
    if (seq[i].kind != LayerKind::up_block || seq[i].c_in != 64 || seq[i].c_out != 32) return false;
    ++i;
    return seq[i].kind == LayerKind::head && seq[i].c_in == 32 && seq[i].c_out == volume_channels;
}

} // namespace banet
