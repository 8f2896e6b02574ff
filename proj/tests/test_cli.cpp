#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "banet/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("banet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    CliResult run(const std::string& args) const {
        const std::string err_file = path("stderr.txt");
        const std::string cmd = std::string(BANET_CLI_PATH) + " " + args + " 2>" + err_file;
        CliResult r;
        FILE* pipe = popen(cmd.c_str(), "r");
        if (!pipe) return r;
        std::array<char, 4096> buf;
        std::size_t n;
        while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
        const int status = pclose(pipe);
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        std::ifstream in(err_file);
        std::stringstream ss;
        ss << in.rdbuf();
        r.err = ss.str();
        return r;
    }

    void write_pair(int w, int h, std::uint32_t seed) const {
        std::mt19937 rng(seed);
        std::uniform_int_distribution<int> byte(0, 255);
        for (const char* name : {"left.png", "right.png"}) {
            banet::RgbImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
            for (auto& p : img.pixels) p = static_cast<std::uint8_t>(byte(rng));
            banet::write_rgb_png(path(name), img);
        }
    }

    fs::path dir_;
};

std::vector<json> json_lines(const std::string& text) {
    std::vector<json> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

} // namespace

TEST_F(CliTest, HelpExitsZeroForEverySubcommand) {
    EXPECT_EQ(run("--help").code, 0);
    for (const char* sub : {"infer", "eval", "macs", "bench", "selftest", "init-weights"}) {
        const CliResult r = run(std::string(sub) + " --help");
        EXPECT_EQ(r.code, 0) << sub;
        EXPECT_NE(r.out.find("--"), std::string::npos) << sub;
    }
}

TEST_F(CliTest, UsageErrorsExitOne) {
    EXPECT_EQ(run("macs --bogus").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("infer --left a.png").code, 1);
    write_pair(64, 32, 1);
    const CliResult r = run("infer --left " + path("left.png") + " --right " + path("right.png") + " --out-disparity " +
                      path("d.pfm") + " --seed 1 --no-ba --out-attention " + path("a.png"));
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err)["error"], "usage");
}

TEST_F(CliTest, InferWritesDisparityInRange) {
    write_pair(96, 64, 2);
    const CliResult r = run("infer --left " + path("left.png") + " --right " + path("right.png") + " --out-disparity " +
                      path("d.pfm") + " --out-attention " + path("a.png") + " --seed 3");
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["config"], "ba+ssa");
    EXPECT_EQ(j["width"], 96);
    EXPECT_EQ(j["height"], 64);
    const auto d = banet::read_pfm(path("d.pfm"));
    ASSERT_EQ(d.width, 96);
    ASSERT_EQ(d.height, 64);
    for (float v : d.values) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 188.0f);
    }
    EXPECT_TRUE(fs::exists(path("a.png")));
}

TEST_F(CliTest, AblationFlagsSelectBaseline) {
    write_pair(64, 64, 4);
    const CliResult r = run("infer --left " + path("left.png") + " --right " + path("right.png") + " --out-disparity " +
                      path("d.png") + " --format kitti --seed 5 --no-ba --no-ssa");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["config"], "baseline");
    EXPECT_EQ(banet::read_kitti_png(path("d.png")).width, 64);
}

TEST_F(CliTest, MissingInputIsDataErrorNamingPath) {
    write_pair(64, 32, 6);
    const std::string missing = path("nope.png");
    const CliResult r = run("infer --left " + path("left.png") + " --right " + missing + " --out-disparity " +
                      path("d.pfm") + " --seed 1");
    EXPECT_EQ(r.code, 2);
    const json e = json::parse(r.err);
    EXPECT_EQ(e["error"], "io");
    EXPECT_NE(e["message"].get<std::string>().find(missing), std::string::npos);
}

TEST_F(CliTest, EvalIdenticalFilesScoreZero) {
    std::vector<float> v(20 * 10);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5f * static_cast<float>(i % 97);
    banet::write_pfm(path("gt.pfm"), banet::DisparityFile::dense(20, 10, v));
    const CliResult r = run("eval --pred " + path("gt.pfm") + " --gt " + path("gt.pfm"));
    ASSERT_EQ(r.code, 0) << r.err;
    const json agg = json::parse(r.out)["aggregate"];
    EXPECT_EQ(agg["epe"], 0.0);
    EXPECT_EQ(agg["bad3"], 0.0);
    EXPECT_EQ(agg["d1"], 0.0);
    EXPECT_EQ(agg["evaluated"], 200);
}

TEST_F(CliTest, EvalQuarterOutliersGivesD1TwentyFive) {
    fs::create_directories(path("pred"));
    fs::create_directories(path("gt"));
    // Two files of 2x2; one pixel in each is a 10 px outlier on gt 20.
    for (const char* stem : {"a", "b"}) {
        banet::write_pfm(path(std::string("gt/") + stem + ".pfm"), banet::DisparityFile::dense(2, 2, {20, 20, 20, 20}));
        banet::write_pfm(path(std::string("pred/") + stem + ".pfm"),
                         banet::DisparityFile::dense(2, 2, {20, 21, 30, 20}));
    }
    const CliResult r = run("eval --pred " + path("pred") + " --gt " + path("gt"));
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["aggregate"]["d1"], 25.0);
    EXPECT_EQ(j["aggregate"]["bad3"], 25.0);
    EXPECT_DOUBLE_EQ(j["aggregate"]["epe"].get<double>(), 11.0 / 4);
    EXPECT_EQ(j["files"].size(), 2u);

    const CliResult csv = run("eval --format csv --pred " + path("pred") + " --gt " + path("gt"));
    ASSERT_EQ(csv.code, 0);
    EXPECT_NE(csv.out.find("aggregate,all,2.75,25,25,8,8"), std::string::npos) << csv.out;
}

TEST_F(CliTest, EvalRejectsEmptyIntersectionAndOrphans) {
    banet::DisparityFile gt = banet::DisparityFile::dense(2, 2, {1, 2, 3, 4});
    gt.valid.assign(4, 0);
    banet::write_kitti_png(path("gt.png"), gt);
    banet::write_pfm(path("pred.pfm"), banet::DisparityFile::dense(2, 2, {1, 2, 3, 4}));
    const CliResult empty = run("eval --pred " + path("pred.pfm") + " --gt " + path("gt.png"));
    EXPECT_EQ(empty.code, 2);
    EXPECT_EQ(json::parse(empty.err)["error"], "data");

    fs::create_directories(path("p"));
    fs::create_directories(path("g"));
    banet::write_pfm(path("p/x.pfm"), banet::DisparityFile::dense(2, 2, {1, 2, 3, 4}));
    banet::write_pfm(path("g/y.pfm"), banet::DisparityFile::dense(2, 2, {1, 2, 3, 4}));
    const CliResult orphan = run("eval --pred " + path("p") + " --gt " + path("g"));
    EXPECT_EQ(orphan.code, 2);
    EXPECT_NE(orphan.err.find("unmatched files"), std::string::npos);
}

TEST_F(CliTest, MacsReportsStagesThatSum) {
    const CliResult r = run("macs --height 540 --width 960");
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    std::uint64_t sum = 0;
    for (const auto& s : j["stages"]) sum += s["macs"].get<std::uint64_t>();
    EXPECT_EQ(sum, j["total_macs"].get<std::uint64_t>());
    EXPECT_EQ(j["padded_height"], 544);
    const json base = json::parse(run("macs --no-ba --no-ssa").out);
    EXPECT_LT(base["total_macs"].get<std::uint64_t>(), j["total_macs"].get<std::uint64_t>());
}

TEST_F(CliTest, SelftestPassesAndDetectsPerturbation) {
    const CliResult ok = run("selftest --instances 3");
    ASSERT_EQ(ok.code, 0) << ok.out;
    const auto lines = json_lines(ok.out);
    ASSERT_FALSE(lines.empty());
    EXPECT_EQ(lines.back()["summary"]["failed"], 0);

    const CliResult bad = run("selftest --instances 2 --perturb-gradients 1e-3");
    EXPECT_EQ(bad.code, 3);
    const auto bad_lines = json_lines(bad.out);
    EXPECT_GT(bad_lines.back()["summary"]["failed"].get<int>(), 0);
}

TEST_F(CliTest, InitWeightsIsBytewiseReproducible) {
    ASSERT_EQ(run("init-weights --no-ba --no-ssa --seed 9 --out " + path("a.banw")).code, 0);
    ASSERT_EQ(run("init-weights --no-ba --no-ssa --seed 9 --out " + path("b.banw")).code, 0);
    ASSERT_EQ(run("init-weights --no-ba --no-ssa --seed 10 --out " + path("c.banw")).code, 0);
    const auto a = banet::read_file_bytes(path("a.banw"));
    EXPECT_EQ(a, banet::read_file_bytes(path("b.banw")));
    EXPECT_NE(a, banet::read_file_bytes(path("c.banw")));
}

TEST_F(CliTest, WeightsForAnotherConfigurationAreRejected) {
    write_pair(64, 32, 7);
    ASSERT_EQ(run("init-weights --no-ba --no-ssa --seed 1 --out " + path("w.banw")).code, 0);
    const CliResult r = run("infer --left " + path("left.png") + " --right " + path("right.png") + " --out-disparity " +
                      path("d.pfm") + " --weights " + path("w.banw"));
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(json::parse(r.err)["error"], "parameter");
}
