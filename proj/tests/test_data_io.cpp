#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <random>

#include "banet/io.hpp"

using namespace banet;

namespace {

class TempDir {
public:
    TempDir() {
        dir_ = std::filesystem::temp_directory_path() /
               ("banet_io_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() { std::filesystem::remove_all(dir_); }
    std::string operator/(const std::string& name) const { return (dir_ / name).string(); }

private:
    std::filesystem::path dir_;
};

bool bits_equal(float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); }

DisparityFile random_disparity(int w, int h, std::uint64_t seed, float hi) {
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    std::uniform_real_distribution<float> u(0.0f, hi);
    std::vector<float> v(static_cast<std::size_t>(w) * h);
    for (auto& x : v) x = u(rng);
    return DisparityFile::dense(w, h, std::move(v));
}

RgbImage random_rgb(int w, int h, std::uint32_t seed) {
    std::mt19937 rng(seed);
    RgbImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xff);
    return img;
}

} // namespace

TEST(Pfm, SmallFileRoundTripsBitExactly) {
    TempDir tmp;
    const DisparityFile d = DisparityFile::dense(2, 2, {0.5f, 1.0f, 2.0f, 3.0f});
    write_pfm(tmp / "a.pfm", d);
    const DisparityFile r = read_pfm(tmp / "a.pfm");
    ASSERT_EQ(r.width, 2);
    ASSERT_EQ(r.height, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_TRUE(bits_equal(r.values[i], d.values[i]));
        EXPECT_EQ(r.valid[i], 1);
    }
}

TEST(Pfm, RowsAreStoredBottomUp) {
    TempDir tmp;
    write_pfm(tmp / "a.pfm", DisparityFile::dense(1, 2, {7.0f, 9.0f}));
    const auto bytes = read_file_bytes(tmp / "a.pfm");
    const std::string header = "Pf\n1 2\n-1.0\n";
    ASSERT_EQ(bytes.size(), header.size() + 8);
    float first = 0;
    std::memcpy(&first, bytes.data() + header.size(), 4);
    EXPECT_EQ(first, 9.0f);
}

TEST(Pfm, BothEndiannessesLoadIdentically) {
    TempDir tmp;
    const DisparityFile d = random_disparity(13, 7, 1, 200.0f);
    write_pfm(tmp / "le.pfm", d, true);
    write_pfm(tmp / "be.pfm", d, false);
    EXPECT_NE(read_file_bytes(tmp / "le.pfm"), read_file_bytes(tmp / "be.pfm"));
    const DisparityFile le = read_pfm(tmp / "le.pfm");
    const DisparityFile be = read_pfm(tmp / "be.pfm");
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        EXPECT_TRUE(bits_equal(le.values[i], d.values[i]));
        EXPECT_TRUE(bits_equal(be.values[i], d.values[i]));
    }
}

TEST(Pfm, DistinctErrors) {
    TempDir tmp;
    write_pfm(tmp / "a.pfm", random_disparity(4, 3, 2, 10.0f));
    auto bytes = read_file_bytes(tmp / "a.pfm");
    auto code_of = [](const std::vector<std::uint8_t>& b) {
        try {
            parse_pfm(b);
        } catch (const FormatError& e) {
            return e.code();
        }
        ADD_FAILURE() << "parse succeeded";
        return FormatErrc::bad_version;
    };
    auto truncated = bytes;
    truncated.pop_back();
    EXPECT_EQ(code_of(truncated), FormatErrc::truncated);
    auto color = bytes;
    color[1] = 'F';
    EXPECT_EQ(code_of(color), FormatErrc::unsupported);
    auto magic = bytes;
    magic[0] = 'Q';
    EXPECT_EQ(code_of(magic), FormatErrc::bad_magic);
    auto longer = bytes;
    longer.push_back(0);
    EXPECT_EQ(code_of(longer), FormatErrc::trailing_data);
    EXPECT_THROW(read_pfm(tmp / "missing.pfm"), IoError);
}

TEST(Pfm, NonFiniteValuesLoadAsInvalidZeros) {
    TempDir tmp;
    DisparityFile d = DisparityFile::dense(3, 1, {1.0f, INFINITY, NAN});
    write_pfm(tmp / "a.pfm", d);
    const DisparityFile r = read_pfm(tmp / "a.pfm");
    EXPECT_EQ(r.valid, (std::vector<std::uint8_t>{1, 0, 0}));
    EXPECT_EQ(r.values[1], 0.0f);
    EXPECT_EQ(r.values[2], 0.0f);
}

TEST(Pfm, EverySingleByteHeaderCorruptionIsRejected) {
    TempDir tmp;
    for (bool little : {true, false}) {
        write_pfm(tmp / "a.pfm", random_disparity(12, 10, 3, 50.0f), little);
        const auto bytes = read_file_bytes(tmp / "a.pfm");
        const std::size_t header = little ? std::string("Pf\n12 10\n-1.0\n").size() : std::string("Pf\n12 10\n1.0\n").size();
        for (std::size_t pos = 0; pos < header; ++pos) {
            for (int v = 0; v < 256; ++v) {
                if (v == bytes[pos]) continue;
                auto bad = bytes;
                bad[pos] = static_cast<std::uint8_t>(v);
                EXPECT_THROW(parse_pfm(bad), FormatError) << "byte " << pos << " -> " << v;
            }
        }
    }
}

TEST(Kitti, StoredValueDefinitions) {
    TempDir tmp;
    write_png(tmp / "k.png", PngImage{3, 1, 16, 1, {256, 0, 65535}});
    const DisparityFile d = read_kitti_png(tmp / "k.png");
    EXPECT_EQ(d.values[0], 1.0f);
    EXPECT_EQ(d.valid[0], 1);
    EXPECT_EQ(d.values[1], 0.0f);
    EXPECT_EQ(d.valid[1], 0);
    EXPECT_EQ(d.values[2], 65535.0f / 256.0f);
}

TEST(Kitti, RoundTripWithinQuantizationBound) {
    TempDir tmp;
    const DisparityFile d = random_disparity(64, 48, 4, kKittiMaxDisparity);
    write_kitti_png(tmp / "k.png", d);
    const DisparityFile r = read_kitti_png(tmp / "k.png");
    double worst = 0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        if (d.values[i] * 256.0f >= 0.5f) {
            EXPECT_EQ(r.valid[i], 1);
        }
        worst = std::max(worst, std::fabs(static_cast<double>(r.values[i]) - d.values[i]));
    }
    EXPECT_LE(worst, 1.0 / 512.0);
}

TEST(Kitti, WriteRejectsOutOfRangeAndDropsNegatives) {
    TempDir tmp;
    EXPECT_THROW(write_kitti_png(tmp / "k.png", DisparityFile::dense(1, 1, {256.0f})), FormatError);
    EXPECT_NO_THROW(write_kitti_png(tmp / "k.png", DisparityFile::dense(1, 1, {255.99f})));
    write_kitti_png(tmp / "k.png", DisparityFile::dense(2, 1, {-3.0f, 4.0f}));
    const DisparityFile r = read_kitti_png(tmp / "k.png");
    EXPECT_EQ(r.valid, (std::vector<std::uint8_t>{0, 1}));
    EXPECT_EQ(r.values[1], 4.0f);
}

TEST(Kitti, RejectsEightBitAndMultiChannel) {
    TempDir tmp;
    write_png(tmp / "g8.png", PngImage{2, 2, 8, 1, {1, 2, 3, 4}});
    EXPECT_THROW(read_kitti_png(tmp / "g8.png"), FormatError);
    write_png(tmp / "rgb16.png", PngImage{1, 1, 16, 3, {1, 2, 3}});
    EXPECT_THROW(read_kitti_png(tmp / "rgb16.png"), FormatError);
}

TEST(Kitti, EverySingleByteHeaderCorruptionIsRejected) {
    TempDir tmp;
    write_kitti_png(tmp / "k.png", random_disparity(16, 8, 5, 100.0f));
    const auto bytes = read_file_bytes(tmp / "k.png");
    // Signature (8) plus the IHDR chunk: length, type, 13 data bytes, CRC.
    constexpr std::size_t header = 8 + 4 + 4 + 13 + 4;
    for (std::size_t pos = 0; pos < header; ++pos) {
        for (int v = 0; v < 256; v += 1) {
            if (v == bytes[pos]) continue;
            auto bad = bytes;
            bad[pos] = static_cast<std::uint8_t>(v);
            write_file_bytes(tmp / "bad.png", bad);
            EXPECT_THROW(read_kitti_png(tmp / "bad.png"), FormatError) << "byte " << pos << " -> " << v;
        }
    }
}

TEST(Images, MidGrayNormalizesToClosedForm) {
    TempDir tmp;
    RgbImage img{5, 3, std::vector<std::uint8_t>(45, 128)};
    write_rgb_png(tmp / "l.png", img);
    write_rgb_png(tmp / "r.png", img);
    const auto [l, r] = load_image_pair(tmp / "l.png", tmp / "r.png");
    ASSERT_EQ(l.shape(), (Shape{1, 3, 3, 5}));
    for (int c = 0; c < 3; ++c) {
        const float expected = (128.0f / 255.0f - kImageMean[c]) / kImageStd[c];
        for (int i = 0; i < 15; ++i) EXPECT_EQ(l.plane(0, c)[i], expected);
    }
    EXPECT_TRUE(l.bitwise_equal(r));
}

TEST(Images, PpmAndPngGiveIdenticalTensors) {
    TempDir tmp;
    const RgbImage img = random_rgb(17, 9, 6);
    write_ppm(tmp / "a.ppm", img);
    write_rgb_png(tmp / "a.png", img);
    const auto [from_ppm, from_png] = load_image_pair(tmp / "a.ppm", tmp / "a.png");
    EXPECT_TRUE(from_ppm.bitwise_equal(from_png));
}

TEST(Images, SizeMismatchNamesBothSizes) {
    TempDir tmp;
    write_rgb_png(tmp / "l.png", random_rgb(8, 4, 1));
    write_rgb_png(tmp / "r.png", random_rgb(6, 4, 2));
    try {
        load_image_pair(tmp / "l.png", tmp / "r.png");
        FAIL() << "expected a size mismatch";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("8x4"), std::string::npos) << msg;
        EXPECT_NE(msg.find("6x4"), std::string::npos) << msg;
    }
}

TEST(Images, RejectsNonRgbAndMissingFiles) {
    TempDir tmp;
    write_png(tmp / "g.png", PngImage{2, 2, 8, 1, {1, 2, 3, 4}});
    EXPECT_THROW(read_rgb(tmp / "g.png"), FormatError);
    EXPECT_THROW(read_rgb(tmp / "nothing.png"), IoError);
    write_file_bytes(tmp / "p.ppm", {'P', '6', '\n', '2', ' ', '2', '\n', '2', '5', '5', '\n', 1, 2});
    EXPECT_THROW(read_rgb(tmp / "p.ppm"), FormatError);
}

TEST(UnitMap, RoundsHalfUp) {
    TempDir tmp;
    // 0.5 * 255 = 127.5 is the only exactly representable midpoint.
    const Tensor map(Shape{1, 1, 1, 7}, {0.0f, 0.5f, 1.0f, 0.25f, 0.001f, -0.5f, 1.5f});
    write_unit_map_png(tmp / "a.png", map);
    const PngImage img = read_png(tmp / "a.png");
    ASSERT_EQ(img.bit_depth, 8);
    EXPECT_EQ(img.samples, (std::vector<std::uint16_t>{0, 128, 255, 64, 0, 0, 255}));
}

TEST(Mask, NonzeroSelects) {
    TempDir tmp;
    write_png(tmp / "m.png", PngImage{4, 1, 8, 1, {0, 1, 255, 0}});
    int w = 0, h = 0;
    EXPECT_EQ(read_mask_png(tmp / "m.png", &w, &h), (std::vector<std::uint8_t>{0, 1, 1, 0}));
    EXPECT_EQ(w, 4);
    EXPECT_EQ(h, 1);
}
