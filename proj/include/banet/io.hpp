#pragma once

// Disparity and image file formats: PFM, KITTI 16-bit PNG, 8-bit RGB
// PNG/PPM inputs and 8-bit grayscale PNG export.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <regex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <png.h>

#include "banet/tensor.hpp"
#include "banet/weights.hpp"

namespace banet {

/// A disparity map in pixels with its ground-truth validity mask.
struct DisparityFile {
    int width = 0;
    int height = 0;
    std::vector<float> values;
    std::vector<std::uint8_t> valid;

    static DisparityFile dense(int width, int height, std::vector<float> values) {
        DisparityFile d{width, height, std::move(values), {}};
        d.valid.assign(d.values.size(), 1);
        return d;
    }

    Tensor to_tensor() const { return Tensor(Shape{1, 1, height, width}, values); }
};

inline DisparityFile disparity_from_tensor(const Tensor& t) {
    if (t.n() != 1 || t.c() != 1) throw ShapeError("disparity tensor must be (1,1,h,w), got " + to_string(t.shape()));
    return DisparityFile::dense(t.w(), t.h(), t.vec());
}

// ---------------------------------------------------------------------------
// PFM

inline void write_pfm(const std::string& path, const DisparityFile& d, bool little_endian = true) {
    if (d.values.size() != static_cast<std::size_t>(d.width) * d.height || d.width < 1 || d.height < 1) {
        throw ShapeError("write_pfm: value count does not match " + std::to_string(d.width) + "x" +
                         std::to_string(d.height));
    }
    std::ostringstream header;
    header << "Pf\n" << d.width << ' ' << d.height << '\n' << (little_endian ? "-1.0" : "1.0") << '\n';
    const std::string hs = header.str();
    std::vector<std::uint8_t> bytes(hs.begin(), hs.end());
    bytes.reserve(bytes.size() + d.values.size() * 4);
    for (int y = d.height - 1; y >= 0; --y) {
        for (int x = 0; x < d.width; ++x) {
            const auto bits = std::bit_cast<std::uint32_t>(d.values[static_cast<std::size_t>(y) * d.width + x]);
            for (int i = 0; i < 4; ++i) {
                const int shift = little_endian ? 8 * i : 8 * (3 - i);
                bytes.push_back(static_cast<std::uint8_t>(bits >> shift));
            }
        }
    }
    write_file_bytes(path, bytes);
}

/// Header is exactly "Pf\n<w> <h>\n<scale>\n" with decimal dimensions and
/// |scale| = 1, and the payload is exactly w*h floats. The strict layout is
/// what lets any single-byte change of the header be rejected.
inline DisparityFile parse_pfm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != 'f' && bytes[1] != 'F')) {
        throw FormatError(FormatErrc::bad_magic, "PFM files start with Pf");
    }
    if (bytes[1] == 'F') throw FormatError(FormatErrc::unsupported, "color PFM (PF) is not a disparity map");
    if (bytes.size() < 3 || bytes[2] != '\n') throw FormatError(FormatErrc::bad_magic, "PFM magic must end its line");
    std::size_t pos = 3;
    auto line = [&](const char* what) {
        const auto* begin = bytes.data() + pos;
        const auto* nl = static_cast<const std::uint8_t*>(std::memchr(begin, '\n', bytes.size() - pos));
        if (!nl) throw FormatError(FormatErrc::truncated, std::string("PFM header ends before ") + what);
        std::string t(begin, nl);
        pos += t.size() + 1;
        return t;
    };
    auto dimension = [](const std::string& t) {
        if (t.empty() || t.size() > 9 || t[0] == '0' ||
            !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            throw FormatError(FormatErrc::bad_header, "PFM dimension '" + t + "' is not a positive integer");
        }
        return std::stoi(t);
    };
    const std::string dims = line("the size line");
    const auto space = dims.find(' ');
    if (space == std::string::npos) throw FormatError(FormatErrc::bad_header, "PFM size line must be '<w> <h>'");
    const int width = dimension(dims.substr(0, space));
    const int height = dimension(dims.substr(space + 1));
    const std::string scale_text = line("the scale line");
    static const std::regex decimal(R"(-?(0|[1-9][0-9]*)(\.[0-9]+)?)");
    if (!std::regex_match(scale_text, decimal)) {
        throw FormatError(FormatErrc::bad_header, "PFM scale '" + scale_text + "' is not a decimal number");
    }
    const double scale = std::stod(scale_text);
    if (std::fabs(scale) != 1.0) {
        throw FormatError(FormatErrc::unsupported, "PFM scale magnitude must be 1, got " + scale_text);
    }
    const bool little = scale < 0;
    const std::size_t count = static_cast<std::size_t>(width) * height;
    if (bytes.size() - pos < count * 4) {
        throw FormatError(FormatErrc::truncated, "PFM payload holds " + std::to_string((bytes.size() - pos) / 4) +
                                                     " of " + std::to_string(count) + " values");
    }
    if (bytes.size() - pos > count * 4) {
        throw FormatError(FormatErrc::trailing_data, "PFM payload is longer than " + std::to_string(width) + "x" +
                                                         std::to_string(height) + " values");
    }
    DisparityFile d;
    d.width = width;
    d.height = height;
    d.values.resize(count);
    d.valid.assign(count, 1);
    for (int row = 0; row < height; ++row) {
        const int y = height - 1 - row;
        for (int x = 0; x < width; ++x) {
            const std::uint8_t* p = bytes.data() + pos + (static_cast<std::size_t>(row) * width + x) * 4;
            std::uint32_t bits = 0;
            for (int i = 0; i < 4; ++i) {
                const int shift = little ? 8 * i : 8 * (3 - i);
                bits |= static_cast<std::uint32_t>(p[i]) << shift;
            }
            const float v = std::bit_cast<float>(bits);
            const std::size_t idx = static_cast<std::size_t>(y) * width + x;
            if (std::isfinite(v)) {
                d.values[idx] = v;
            } else {
                d.values[idx] = 0.0f;
                d.valid[idx] = 0;
            }
        }
    }
    return d;
}

inline DisparityFile read_pfm(const std::string& path) { return parse_pfm(read_file_bytes(path)); }

// ---------------------------------------------------------------------------
// PNG

struct PngImage {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    int channels = 1;
    std::vector<std::uint16_t> samples;  // row-major, interleaved channels
};

namespace detail {

struct FileCloser {
    std::FILE* f;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

inline bool has_png_signature(const std::vector<std::uint8_t>& head) {
    return head.size() >= 8 && png_sig_cmp(head.data(), 0, 8) == 0;
}

// libpng reports through callbacks; the message is kept for the exception
// thrown after longjmp instead of going to stderr.
inline void png_error_to_string(png_structp png, png_const_charp msg) {
    if (auto* out = static_cast<std::string*>(png_get_error_ptr(png))) *out = msg;
    png_longjmp(png, 1);
}

inline void png_ignore_warning(png_structp, png_const_charp) {}

inline FormatErrc png_failure_code(const std::string& reason) {
    if (reason.find("CRC") != std::string::npos) return FormatErrc::checksum;
    for (const char* eof : {"Read Error", "Not enough", "EOF", "truncat"})
        if (reason.find(eof) != std::string::npos) return FormatErrc::truncated;
    return FormatErrc::bad_header;
}

} // namespace detail

inline PngImage read_png(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open " + path);
    detail::FileCloser closer{fp};
    std::array<std::uint8_t, 8> sig{};
    if (std::fread(sig.data(), 1, 8, fp) != 8 || png_sig_cmp(sig.data(), 0, 8) != 0) {
        throw FormatError(FormatErrc::bad_magic, path + " is not a PNG file");
    }
    std::string reason = "corrupt or truncated";
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &reason, detail::png_error_to_string,
                                             detail::png_ignore_warning);
    if (!png) throw Error("libpng: cannot allocate read struct");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int depth = 0, color = 0, interlace = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(detail::png_failure_code(reason), path + ": " + reason);
    }
    png_init_io(png, fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    png_get_IHDR(png, info, &width, &height, &depth, &color, &interlace, nullptr, nullptr);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (interlace != PNG_INTERLACE_NONE) png_set_interlace_handling(png);
    png_read_update_info(png, info);
    const int channels = png_get_channels(png, info);
    const int out_depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raw.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    PngImage img;
    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.bit_depth = out_depth;
    img.channels = channels;
    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    img.samples.resize(count);
    if (out_depth == 16) {
        for (std::size_t i = 0; i < count; ++i)
            img.samples[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    } else {
        for (std::size_t i = 0; i < count; ++i) img.samples[i] = raw[i];
    }
    return img;
}

/// Writes gray (1), RGB (3) or RGBA (4) samples at 8 or 16 bits.
inline void write_png(const std::string& path, const PngImage& img) {
    if (img.bit_depth != 8 && img.bit_depth != 16) throw Error("write_png: bit depth must be 8 or 16");
    int color = 0;
    switch (img.channels) {
        case 1: color = PNG_COLOR_TYPE_GRAY; break;
        case 3: color = PNG_COLOR_TYPE_RGB; break;
        case 4: color = PNG_COLOR_TYPE_RGB_ALPHA; break;
        default: throw Error("write_png: unsupported channel count");
    }
    const std::size_t count = static_cast<std::size_t>(img.width) * img.height * img.channels;
    if (img.samples.size() != count) throw ShapeError("write_png: sample count mismatch");
    const std::size_t bps = img.bit_depth / 8;
    std::vector<std::uint8_t> raw(count * bps);
    for (std::size_t i = 0; i < count; ++i) {
        if (bps == 2) {
            raw[2 * i] = static_cast<std::uint8_t>(img.samples[i] >> 8);
            raw[2 * i + 1] = static_cast<std::uint8_t>(img.samples[i] & 0xff);
        } else {
            raw[i] = static_cast<std::uint8_t>(img.samples[i]);
        }
    }
    std::vector<png_bytep> rows(img.height);
    const std::size_t rowbytes = static_cast<std::size_t>(img.width) * img.channels * bps;
    for (int y = 0; y < img.height; ++y) rows[y] = raw.data() + y * rowbytes;

    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot write " + path);
    detail::FileCloser closer{fp};
    std::string reason = "write failed";
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &reason, detail::png_error_to_string,
                                              detail::png_ignore_warning);
    if (!png) throw Error("libpng: cannot allocate write struct");
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng failed writing " + path + ": " + reason);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
                 img.bit_depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------------------
// KITTI disparity PNG: uint16 = round(disparity * 256), 0 marks no data.

inline constexpr float kKittiMaxDisparity = 65535.0f / 256.0f;

inline DisparityFile kitti_from_png(const PngImage& img, const std::string& path) {
    if (img.channels != 1) {
        throw FormatError(FormatErrc::unsupported, path + ": KITTI disparity PNG must be single-channel, found " +
                                                       std::to_string(img.channels) + " channels");
    }
    if (img.bit_depth != 16) {
        throw FormatError(FormatErrc::unsupported, path + ": KITTI disparity PNG must be 16-bit, found " +
                                                       std::to_string(img.bit_depth) + "-bit");
    }
    DisparityFile d;
    d.width = img.width;
    d.height = img.height;
    d.values.resize(img.samples.size());
    d.valid.resize(img.samples.size());
    for (std::size_t i = 0; i < img.samples.size(); ++i) {
        d.valid[i] = img.samples[i] != 0;
        d.values[i] = d.valid[i] ? static_cast<float>(img.samples[i]) / 256.0f : 0.0f;
    }
    return d;
}

inline DisparityFile read_kitti_png(const std::string& path) { return kitti_from_png(read_png(path), path); }

/// Invalid, negative and non-finite pixels are stored as 0 (no data);
/// values above 65535/256 px are rejected.
inline void write_kitti_png(const std::string& path, const DisparityFile& d) {
    const std::size_t count = static_cast<std::size_t>(d.width) * d.height;
    if (d.values.size() != count) throw ShapeError("write_kitti_png: value count mismatch");
    PngImage img{d.width, d.height, 16, 1, std::vector<std::uint16_t>(count, 0)};
    for (std::size_t i = 0; i < count; ++i) {
        const float v = d.values[i];
        const bool valid = d.valid.empty() || d.valid[i];
        if (!valid || !std::isfinite(v) || v < 0) continue;
        if (v > kKittiMaxDisparity) {
            throw FormatError(FormatErrc::out_of_range, "write_kitti_png: disparity " + std::to_string(v) +
                                                            " px exceeds the 16-bit range");
        }
        img.samples[i] = static_cast<std::uint16_t>(std::lround(v * 256.0f));
    }
    write_png(path, img);
}

// ---------------------------------------------------------------------------
// RGB inputs

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // interleaved RGB
};

inline RgbImage parse_ppm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
        throw FormatError(FormatErrc::bad_magic, path + " is not a binary PPM (P6)");
    }
    std::size_t pos = 2;
    auto token = [&]() {
        std::string t;
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
        if (t.empty()) throw FormatError(FormatErrc::truncated, path + ": PPM header is incomplete");
        return t;
    };
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::logic_error&) {
        throw FormatError(FormatErrc::bad_header, path + ": PPM header fields are not numbers");
    }
    if (w < 1 || h < 1) throw FormatError(FormatErrc::bad_header, path + ": invalid PPM size");
    if (maxval != 255) throw FormatError(FormatErrc::unsupported, path + ": only 8-bit PPM (maxval 255) is supported");
    ++pos;
    const std::size_t count = static_cast<std::size_t>(w) * h * 3;
    if (pos > bytes.size() || bytes.size() - pos < count) {
        throw FormatError(FormatErrc::truncated, path + ": PPM payload is truncated");
    }
    return RgbImage{w, h, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + count))};
}

inline void write_ppm(const std::string& path, const RgbImage& img) {
    const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), img.pixels.begin(), img.pixels.end());
    write_file_bytes(path, bytes);
}

inline void write_rgb_png(const std::string& path, const RgbImage& img) {
    write_png(path, PngImage{img.width, img.height, 8, 3,
                             std::vector<std::uint16_t>(img.pixels.begin(), img.pixels.end())});
}

/// Reads an 8-bit RGB image from PNG or binary PPM, sniffing the format.
inline RgbImage read_rgb(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    if (detail::has_png_signature(bytes)) {
        const PngImage png = read_png(path);
        if (png.bit_depth != 8 || (png.channels != 3 && png.channels != 4)) {
            throw FormatError(FormatErrc::unsupported, path + ": expected 8-bit RGB, found " +
                                                           std::to_string(png.channels) + " channels at " +
                                                           std::to_string(png.bit_depth) + " bits");
        }
        RgbImage img{png.width, png.height, {}};
        img.pixels.reserve(static_cast<std::size_t>(png.width) * png.height * 3);
        for (std::size_t i = 0; i < png.samples.size(); i += png.channels)
            for (int c = 0; c < 3; ++c) img.pixels.push_back(static_cast<std::uint8_t>(png.samples[i + c]));
        return img;
    }
    return parse_ppm(bytes, path);
}

inline constexpr std::array<float, 3> kImageMean{0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kImageStd{0.229f, 0.224f, 0.225f};

/// (1, 3, h, w) tensor of (value / 255 - mean) / std per channel.
inline Tensor normalize_image(const RgbImage& img) {
    Tensor t(Shape{1, 3, img.height, img.width});
    for (int c = 0; c < 3; ++c) {
        float* dst = t.plane(0, c);
        for (std::size_t p = 0; p < static_cast<std::size_t>(img.width) * img.height; ++p) {
            dst[p] = (static_cast<float>(img.pixels[p * 3 + c]) / 255.0f - kImageMean[c]) / kImageStd[c];
        }
    }
    return t;
}

inline std::pair<Tensor, Tensor> load_image_pair(const std::string& left_path, const std::string& right_path) {
    const RgbImage l = read_rgb(left_path);
    const RgbImage r = read_rgb(right_path);
    if (l.width != r.width || l.height != r.height) {
        throw ShapeError("image sizes differ: " + left_path + " is " + std::to_string(l.width) + "x" +
                         std::to_string(l.height) + ", " + right_path + " is " + std::to_string(r.width) +
                         "x" + std::to_string(r.height));
    }
    return {normalize_image(l), normalize_image(r)};
}

/// Single-channel map in [0, 1] to an 8-bit PNG, rounding half up.
inline void write_unit_map_png(const std::string& path, const Tensor& map) {
    if (map.n() != 1 || map.c() != 1) throw ShapeError("write_unit_map_png: expected (1,1,h,w)");
    PngImage img{map.w(), map.h(), 8, 1, std::vector<std::uint16_t>(map.size())};
    for (std::size_t i = 0; i < map.size(); ++i) {
        const double v = std::clamp(static_cast<double>(map[i]), 0.0, 1.0) * 255.0;
        img.samples[i] = static_cast<std::uint16_t>(std::floor(v + 0.5));
    }
    write_png(path, img);
}

/// Any grayscale PNG as an evaluation mask: nonzero selects the pixel.
inline std::vector<std::uint8_t> read_mask_png(const std::string& path, int* width = nullptr, int* height = nullptr) {
    const PngImage img = read_png(path);
    if (img.channels != 1) throw FormatError(FormatErrc::unsupported, path + ": mask must be single-channel");
    if (width) *width = img.width;
    if (height) *height = img.height;
    std::vector<std::uint8_t> mask(img.samples.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = img.samples[i] != 0;
    return mask;
}

} // namespace banet
