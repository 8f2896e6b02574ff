#pragma once

// Disparity error metrics and forward evaluation of the training loss.
// Every metric ignores mask-false pixels entirely.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "banet/error.hpp"

namespace banet {

namespace detail {

inline void check_metric_inputs(std::span<const float> pred, std::span<const float> gt,
                                std::span<const std::uint8_t> mask, const char* name) {
    if (pred.size() != gt.size() || mask.size() != gt.size()) {
        throw ShapeError(std::string(name) + ": prediction, ground truth and mask sizes differ (" +
                         std::to_string(pred.size()) + ", " + std::to_string(gt.size()) + ", " +
                         std::to_string(mask.size()) + ")");
    }
}

[[noreturn]] inline void empty_mask(const char* name) {
    throw Error(std::string(name) + ": mask selects no pixels");
}

} // namespace detail

/// Raw error tallies; percentages and means derive from these so results
/// can be summed across files in any order.
struct ErrorCounts {
    std::uint64_t evaluated = 0;
    std::uint64_t bad3 = 0;
    std::uint64_t d1_outliers = 0;
    double abs_error_sum = 0;

    ErrorCounts& operator+=(const ErrorCounts& o) {
        evaluated += o.evaluated;
        bad3 += o.bad3;
        d1_outliers += o.d1_outliers;
        abs_error_sum += o.abs_error_sum;
        return *this;
    }
};

inline bool is_d1_outlier(float pred, float gt) {
    const float err = std::fabs(pred - gt);
    return err > std::max(3.0f, 0.05f * gt);
}

inline ErrorCounts count_errors(std::span<const float> pred, std::span<const float> gt,
                                std::span<const std::uint8_t> mask) {
    detail::check_metric_inputs(pred, gt, mask, "count_errors");
    ErrorCounts c;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!mask[i]) continue;
        const float err = std::fabs(pred[i] - gt[i]);
        ++c.evaluated;
        c.abs_error_sum += err;
        if (err > 3.0f) ++c.bad3;
        if (is_d1_outlier(pred[i], gt[i])) ++c.d1_outliers;
    }
    return c;
}

/// Mean absolute error over mask-true pixels.
inline double epe(std::span<const float> pred, std::span<const float> gt,
                  std::span<const std::uint8_t> mask) {
    detail::check_metric_inputs(pred, gt, mask, "epe");
    double sum = 0;
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!mask[i]) continue;
        sum += std::fabs(static_cast<double>(pred[i]) - gt[i]);
        ++n;
    }
    if (n == 0) detail::empty_mask("epe");
    return sum / static_cast<double>(n);
}

/// Percentage of mask-true pixels with |pred - gt| > threshold.
inline double bad_n(std::span<const float> pred, std::span<const float> gt,
                    std::span<const std::uint8_t> mask, double threshold = 3.0) {
    detail::check_metric_inputs(pred, gt, mask, "bad_n");
    if (!(threshold > 0)) throw Error("bad_n: threshold must be positive");
    std::uint64_t bad = 0;
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!mask[i]) continue;
        ++n;
        if (std::fabs(static_cast<double>(pred[i]) - gt[i]) > threshold) ++bad;
    }
    if (n == 0) detail::empty_mask("bad_n");
    return 100.0 * static_cast<double>(bad) / static_cast<double>(n);
}

/// Percentage of outliers with |pred - gt| > max(3, 0.05 gt).
inline double d1(std::span<const float> pred, std::span<const float> gt,
                 std::span<const std::uint8_t> mask) {
    detail::check_metric_inputs(pred, gt, mask, "d1");
    std::uint64_t bad = 0;
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!mask[i]) continue;
        ++n;
        if (is_d1_outlier(pred[i], gt[i])) ++bad;
    }
    if (n == 0) detail::empty_mask("d1");
    return 100.0 * static_cast<double>(bad) / static_cast<double>(n);
}

enum class Region { all, noc, reflective };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::all: return "all";
        case Region::noc: return "noc";
        case Region::reflective: return "reflective";
    }
    return "all";
}

struct MetricReport {
    double epe = 0;
    double bad3 = 0;
    double d1 = 0;
    std::uint64_t valid = 0;      // ground-truth pixels with data
    std::uint64_t evaluated = 0;  // valid pixels also selected by the mask
    Region region = Region::all;
};

inline MetricReport make_report(const ErrorCounts& c, std::uint64_t valid, Region region) {
    if (c.evaluated == 0) throw Error("make_report: no evaluated pixels");
    MetricReport r;
    const double n = static_cast<double>(c.evaluated);
    r.epe = c.abs_error_sum / n;
    r.bad3 = 100.0 * static_cast<double>(c.bad3) / n;
    r.d1 = 100.0 * static_cast<double>(c.d1_outliers) / n;
    r.valid = valid;
    r.evaluated = c.evaluated;
    r.region = region;
    return r;
}

inline double smooth_l1(double x) {
    const double a = std::fabs(x);
    return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

/// Ground truth average-pooled over valid pixels of each 4x4 cell and
/// divided by 4, the supervision target for the coarse map. Cells with no
/// valid pixel come back invalid.
inline void downsample_ground_truth(std::span<const float> gt, std::span<const std::uint8_t> valid,
                                    int h, int w, std::vector<float>& out,
                                    std::vector<std::uint8_t>& out_valid) {
    const int qh = (h + 3) / 4;
    const int qw = (w + 3) / 4;
    out.assign(static_cast<std::size_t>(qh) * qw, 0.0f);
    out_valid.assign(out.size(), 0);
    for (int cy = 0; cy < qh; ++cy)
        for (int cx = 0; cx < qw; ++cx) {
            double sum = 0;
            int n = 0;
            for (int y = cy * 4; y < std::min(h, cy * 4 + 4); ++y)
                for (int x = cx * 4; x < std::min(w, cx * 4 + 4); ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    if (valid[i]) {
                        sum += gt[i];
                        ++n;
                    }
                }
            if (n > 0) {
                out[static_cast<std::size_t>(cy) * qw + cx] = static_cast<float>(sum / n / 4.0);
                out_valid[static_cast<std::size_t>(cy) * qw + cx] = 1;
            }
        }
}

struct LossWeights {
    double coarse = 0.3;
    double full = 1.0;
};

/// coarse * SL1(d0 - gt/4 pooled) + full * SL1(d1 - gt), each term
/// averaged over its own valid pixels.
inline double smooth_l1_total(std::span<const float> d0, int h0, int w0, std::span<const float> d1,
                              std::span<const float> gt, std::span<const std::uint8_t> valid, int h,
                              int w, LossWeights lw = {}) {
    if (d1.size() != static_cast<std::size_t>(h) * w || gt.size() != d1.size() || valid.size() != d1.size()) {
        throw ShapeError("smooth_l1_total: full-resolution inputs do not match " + std::to_string(h) +
                         "x" + std::to_string(w));
    }
    if (h0 != (h + 3) / 4 || w0 != (w + 3) / 4 || d0.size() != static_cast<std::size_t>(h0) * w0) {
        throw ShapeError("smooth_l1_total: coarse map must be ceil(h/4) x ceil(w/4)");
    }
    std::vector<float> gt4;
    std::vector<std::uint8_t> valid4;
    downsample_ground_truth(gt, valid, h, w, gt4, valid4);
    double coarse = 0;
    std::uint64_t nc = 0;
    for (std::size_t i = 0; i < gt4.size(); ++i) {
        if (!valid4[i]) continue;
        coarse += smooth_l1(static_cast<double>(d0[i]) - gt4[i]);
        ++nc;
    }
    double full = 0;
    std::uint64_t nf = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!valid[i]) continue;
        full += smooth_l1(static_cast<double>(d1[i]) - gt[i]);
        ++nf;
    }
    if (nf == 0) throw Error("smooth_l1_total: no valid ground-truth pixels");
    return lw.coarse * coarse / static_cast<double>(nc) + lw.full * full / static_cast<double>(nf);
}

} // namespace banet
