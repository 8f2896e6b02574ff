// banet: command-line front end for inference, evaluation, MAC reports,
// benchmarks, self-tests and weight initialization.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 self-test failure.
// Errors are printed to stderr as one JSON object on a single line.

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "banet/banet.hpp"
#include "selftest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSelftest = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void print_error(const std::string& kind, const std::string& message, json extra = json::object()) {
    json e{{"error", kind}, {"message", message}};
    e.update(extra);
    std::cerr << e.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Shared flags

struct ModelFlags {
    bool no_ba = false;
    bool no_ssa = false;
    int max_disparity = 192;

    void attach(CLI::App* sub) {
        sub->add_flag("--no-ba", no_ba, "Disable bilateral aggregation (single branch on the raw volume)");
        sub->add_flag("--no-ssa", no_ssa, "Disable scale-aware attention (attention from 1/4 features only)");
        sub->add_option("--max-disparity", max_disparity, "Disparity search range in pixels, a multiple of 4")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    }

    banet::ModelConfig config() const {
        banet::ModelConfig c = no_ba ? banet::baseline_config()
                                     : (no_ssa ? banet::bilateral_config() : banet::full_config());
        c.d_max = max_disparity;
        try {
            c.validate();
        } catch (const banet::Error& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

std::string config_name(const banet::ModelConfig& c) {
    if (!c.bilateral) return "baseline";
    return c.attention == banet::AttentionMode::scale_aware ? "ba+ssa" : "ba";
}

struct WeightFlags {
    std::string path;
    std::uint64_t seed = 0;
    CLI::Option* path_opt = nullptr;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* sub, bool seed_default) {
        path_opt = sub->add_option("--weights", path, "Weight file written by init-weights");
        seed_opt = sub->add_option("--seed", seed,
                                   seed_default ? "Seed for random weights when --weights is absent"
                                                : "Seed for random weights instead of a weight file");
        if (seed_default) seed_opt->capture_default_str();
        path_opt->excludes(seed_opt);
    }

    void require_one() const {
        if (!*path_opt && !*seed_opt) throw UsageError("one of --weights or --seed is required");
    }

    banet::WeightStore load(const banet::ModelConfig& cfg) const {
        if (*path_opt) {
            banet::WeightStore w = banet::load_weights(path);
            banet::validate_store(w, cfg);
            return w;
        }
        return banet::init_random(cfg, seed);
    }

    json describe() const { return *path_opt ? json{{"weights", path}} : json{{"seed", seed}}; }
};

json stats_json(const banet::LatencyStats& s) { return {{"median_ms", s.median_ms}, {"p95_ms", s.p95_ms}}; }

// ---------------------------------------------------------------------------
// infer

struct InferArgs {
    std::string left, right, out_disparity, out_attention, format = "pfm";
    ModelFlags model;
    WeightFlags weights;
};

void setup_infer(CLI::App& app, InferArgs& a) {
    auto* sub = app.add_subcommand("infer", "Estimate disparity for a rectified stereo pair");
    sub->add_option("--left", a.left, "Left view, 8-bit RGB PNG or binary PPM")->required();
    sub->add_option("--right", a.right, "Right view, same size as the left view")->required();
    sub->add_option("--out-disparity", a.out_disparity, "Output disparity map")->required();
    sub->add_option("--out-attention", a.out_attention,
                    "Optional 8-bit PNG of the attention map at 1/4 resolution (A*255, rounded half up)");
    sub->add_option("--format", a.format, "Disparity file format")
        ->check(CLI::IsMember({"pfm", "kitti"}))
        ->capture_default_str();
    a.model.attach(sub);
    a.weights.attach(sub, false);
}

int run_infer(const InferArgs& a) {
    a.weights.require_one();
    const banet::ModelConfig cfg = a.model.config();
    if (!a.out_attention.empty() && !cfg.bilateral) {
        throw UsageError("--out-attention needs bilateral aggregation; drop --no-ba");
    }
    const auto [left, right] = banet::load_image_pair(a.left, a.right);
    const banet::WeightStore store = a.weights.load(cfg);
    const banet::ForwardOutput out = banet::forward(left, right, store, cfg);

    const banet::DisparityFile d = banet::disparity_from_tensor(out.d1);
    if (a.format == "pfm") {
        banet::write_pfm(a.out_disparity, d);
    } else {
        banet::write_kitti_png(a.out_disparity, d);
    }
    if (!a.out_attention.empty()) banet::write_unit_map_png(a.out_attention, *out.attention);

    const auto [lo, hi] = std::minmax_element(d.values.begin(), d.values.end());
    double sum = 0;
    for (float v : d.values) sum += v;
    json report{{"config", config_name(cfg)},
                {"width", d.width},
                {"height", d.height},
                {"disparity", {{"min", *lo}, {"max", *hi}, {"mean", sum / static_cast<double>(d.values.size())}}},
                {"outputs",
                 {{"disparity", a.out_disparity},
                  {"format", a.format},
                  {"attention", a.out_attention.empty() ? json(nullptr) : json(a.out_attention)}}},
                {"threads", banet::num_threads()},
                {"warnings", out.diagnostics.warnings}};
    report.update(a.weights.describe());
    std::cout << report.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string pred, gt, mask, format = "json", region = "all";
};

void setup_eval(CLI::App& app, EvalArgs& a) {
    auto* sub = app.add_subcommand("eval", "Score predicted disparities against ground truth");
    sub->add_option("--pred", a.pred, "Predicted disparity file or directory (.pfm or KITTI .png)")
        ->required();
    sub->add_option("--gt", a.gt, "Ground-truth disparity file or directory")->required();
    sub->add_option("--mask", a.mask,
                    "Optional evaluation mask PNG (nonzero selects), a file or a directory paired by stem");
    sub->add_option("--format", a.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    sub->add_option("--region", a.region, "Label for the masked region")
        ->check(CLI::IsMember({"all", "noc", "reflective"}))
        ->capture_default_str();
}

banet::DisparityFile read_disparity(const fs::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".pfm") return banet::read_pfm(p.string());
    if (ext == ".png") return banet::read_kitti_png(p.string());
    throw banet::FormatError(banet::FormatErrc::unsupported, p.string() + ": expected a .pfm or .png disparity file");
}

std::map<std::string, fs::path> files_by_stem(const fs::path& dir, std::initializer_list<const char*> exts) {
    std::map<std::string, fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string ext = e.path().extension().string();
        if (std::none_of(exts.begin(), exts.end(), [&](const char* x) { return ext == x; })) continue;
        const std::string stem = e.path().stem().string();
        if (!out.emplace(stem, e.path()).second) {
            throw banet::Error("two files share the stem '" + stem + "' in " + dir.string());
        }
    }
    return out;
}

struct EvalPair {
    std::string name;
    fs::path pred, gt;
    std::optional<fs::path> mask;
};

std::vector<EvalPair> pair_files(const EvalArgs& a) {
    std::vector<EvalPair> pairs;
    for (const std::string& p : {a.pred, a.gt, a.mask})
        if (!p.empty() && !fs::exists(p)) throw banet::IoError("cannot open " + p);
    const bool pred_dir = fs::is_directory(a.pred), gt_dir = fs::is_directory(a.gt);
    if (pred_dir != gt_dir) throw UsageError("--pred and --gt must both be files or both be directories");
    if (!pred_dir) {
        pairs.push_back({fs::path(a.gt).stem().string(), a.pred, a.gt, std::nullopt});
    } else {
        const auto preds = files_by_stem(a.pred, {".pfm", ".png"});
        const auto gts = files_by_stem(a.gt, {".pfm", ".png"});
        std::vector<std::string> orphans;
        for (const auto& [stem, path] : preds)
            if (!gts.count(stem)) orphans.push_back(path.string());
        for (const auto& [stem, path] : gts)
            if (!preds.count(stem)) orphans.push_back(path.string());
        if (!orphans.empty()) {
            throw banet::Error("unmatched files: " + json(orphans).dump());
        }
        if (gts.empty()) throw banet::Error("no disparity files to evaluate in " + a.gt);
        for (const auto& [stem, path] : gts) pairs.push_back({stem, preds.at(stem), path, std::nullopt});
    }
    if (!a.mask.empty()) {
        if (fs::is_directory(a.mask)) {
            const auto masks = files_by_stem(a.mask, {".png"});
            for (auto& p : pairs) {
                const auto it = masks.find(p.name);
                if (it == masks.end()) throw banet::Error("no mask for '" + p.name + "' in " + a.mask);
                p.mask = it->second;
            }
        } else {
            for (auto& p : pairs) p.mask = fs::path(a.mask);
        }
    }
    return pairs;
}

struct FileResult {
    banet::ErrorCounts counts;
    std::uint64_t valid = 0;
};

FileResult evaluate_pair(const EvalPair& p) {
    const banet::DisparityFile pred = read_disparity(p.pred);
    const banet::DisparityFile gt = read_disparity(p.gt);
    if (pred.width != gt.width || pred.height != gt.height) {
        throw banet::ShapeError(p.name + ": prediction is " + std::to_string(pred.width) + "x" +
                                std::to_string(pred.height) + ", ground truth is " + std::to_string(gt.width) +
                                "x" + std::to_string(gt.height));
    }
    std::vector<std::uint8_t> selected = gt.valid;
    if (p.mask) {
        int mw = 0, mh = 0;
        const auto m = banet::read_mask_png(p.mask->string(), &mw, &mh);
        if (mw != gt.width || mh != gt.height) {
            throw banet::ShapeError(p.mask->string() + ": mask is " + std::to_string(mw) + "x" + std::to_string(mh) +
                                    ", ground truth is " + std::to_string(gt.width) + "x" + std::to_string(gt.height));
        }
        for (std::size_t i = 0; i < selected.size(); ++i) selected[i] = selected[i] && m[i];
    }
    FileResult r;
    r.valid = static_cast<std::uint64_t>(std::count(gt.valid.begin(), gt.valid.end(), 1));
    r.counts = banet::count_errors(pred.values, gt.values, selected);
    return r;
}

json report_json(const banet::ErrorCounts& c, std::uint64_t valid) {
    if (c.evaluated == 0) {
        return {{"epe", nullptr}, {"bad3", nullptr}, {"d1", nullptr}, {"valid", valid}, {"evaluated", 0}};
    }
    const banet::MetricReport r = banet::make_report(c, valid, banet::Region::all);
    return {{"epe", r.epe}, {"bad3", r.bad3}, {"d1", r.d1}, {"valid", r.valid}, {"evaluated", r.evaluated}};
}

std::string csv_field(const json& v) {
    if (v.is_null()) return "";
    std::ostringstream os;
    os << std::setprecision(10) << v.get<double>();
    return os.str();
}

int run_eval(const EvalArgs& a) {
    const std::vector<EvalPair> pairs = pair_files(a);
    std::vector<FileResult> results(pairs.size());
    banet::parallel_for(static_cast<std::int64_t>(pairs.size()), [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) results[i] = evaluate_pair(pairs[i]);
    });
    banet::ErrorCounts total;
    std::uint64_t valid = 0;
    json files = json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        total += results[i].counts;
        valid += results[i].valid;
        json f = report_json(results[i].counts, results[i].valid);
        f["name"] = pairs[i].name;
        files.push_back(f);
    }
    if (total.evaluated == 0) throw banet::Error("no pixel is both valid and selected by the mask");
    json aggregate = report_json(total, valid);
    aggregate["files"] = pairs.size();

    if (a.format == "json") {
        std::cout << json{{"region", a.region}, {"files", files}, {"aggregate", aggregate}}.dump(2) << '\n';
    } else {
        std::cout << "name,region,epe,bad3,d1,valid,evaluated\n";
        auto row = [&](const std::string& name, const json& r) {
            std::cout << name << ',' << a.region << ',' << csv_field(r["epe"]) << ',' << csv_field(r["bad3"]) << ','
                      << csv_field(r["d1"]) << ',' << r["valid"].get<std::uint64_t>() << ','
                      << r["evaluated"].get<std::uint64_t>() << '\n';
        };
        for (const auto& f : files) row(f["name"].get<std::string>(), f);
        row("aggregate", aggregate);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// macs

struct MacsArgs {
    int height = 540, width = 960;
    std::string format = "json";
    bool layers = false;
    ModelFlags model;
};

void setup_macs(CLI::App& app, MacsArgs& a) {
    auto* sub = app.add_subcommand("macs", "Analytic multiply-accumulate count per stage");
    sub->add_option("--height", a.height, "Input height in pixels")->check(CLI::Range(32, 1 << 14))->capture_default_str();
    sub->add_option("--width", a.width, "Input width in pixels")->check(CLI::Range(32, 1 << 14))->capture_default_str();
    sub->add_option("--format", a.format, "Report format")->check(CLI::IsMember({"json", "table"}))->capture_default_str();
    sub->add_flag("--layers", a.layers, "Include the per-layer listing");
    a.model.attach(sub);
}

int run_macs(const MacsArgs& a) {
    const banet::ModelConfig cfg = a.model.config();
    const banet::MacBreakdown b = banet::count_macs(cfg, a.height, a.width);
    if (a.format == "table") {
        std::cout << "config " << config_name(cfg) << ", input " << a.width << "x" << a.height << " (padded "
                  << b.padded_width << "x" << b.padded_height << ")\n";
        std::cout << std::left << std::setw(24) << "stage" << std::right << std::setw(12) << "GMACs" << std::setw(10)
                  << "share" << std::setw(12) << "params" << '\n';
        for (const auto& s : b.stages) {
            std::cout << std::left << std::setw(24) << s.name << std::right << std::fixed << std::setprecision(3)
                      << std::setw(12) << s.macs / 1e9 << std::setprecision(1) << std::setw(9)
                      << 100.0 * s.macs / b.total_macs << '%' << std::setw(12) << s.params << '\n';
        }
        std::cout << std::left << std::setw(24) << "total" << std::right << std::setprecision(3) << std::setw(12)
                  << b.total_macs / 1e9 << std::setw(10) << "" << std::setw(12) << b.total_params << '\n';
        if (a.layers) {
            for (const auto& l : b.layers)
                std::cout << "  " << std::left << std::setw(16) << l.stage << std::setw(40) << l.name << std::right
                          << std::setw(16) << l.macs << '\n';
        }
        return kExitOk;
    }
    json stages = json::array();
    for (const auto& s : b.stages) stages.push_back({{"name", s.name}, {"macs", s.macs}, {"params", s.params}});
    json report{{"config", config_name(cfg)},
                {"height", b.height},
                {"width", b.width},
                {"padded_height", b.padded_height},
                {"padded_width", b.padded_width},
                {"total_macs", b.total_macs},
                {"total_gmacs", b.total_macs / 1e9},
                {"total_params", b.total_params},
                {"stages", stages}};
    if (a.layers) {
        json layers = json::array();
        for (const auto& l : b.layers)
            layers.push_back({{"stage", l.stage}, {"name", l.name}, {"macs", l.macs}, {"params", l.params}});
        report["layers"] = layers;
    }
    std::cout << report.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
    int height = 256, width = 512, warmup = 1, iters = 5;
    bool parallel = false;
    std::string format = "json";
    ModelFlags model;
    WeightFlags weights;
};

void setup_bench(CLI::App& app, BenchArgs& a) {
    auto* sub = app.add_subcommand("bench", "Per-stage wall-clock latency of the forward pass");
    sub->add_option("--height", a.height, "Input height in pixels")->check(CLI::Range(32, 1 << 14))->capture_default_str();
    sub->add_option("--width", a.width, "Input width in pixels")->check(CLI::Range(32, 1 << 14))->capture_default_str();
    sub->add_option("--warmup", a.warmup, "Untimed passes before measuring")->check(CLI::NonNegativeNumber)->capture_default_str();
    sub->add_option("--iters", a.iters, "Timed passes")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--parallel", a.parallel,
                  "Use all hardware threads instead of one (BANET_THREADS, when set, takes precedence)");
    sub->add_option("--format", a.format, "Report format")->check(CLI::IsMember({"json", "table"}))->capture_default_str();
    a.model.attach(sub);
    a.weights.attach(sub, true);
}

int run_bench(const BenchArgs& a) {
    if (!banet::threads_pinned_by_env()) {
        banet::set_num_threads(a.parallel ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency())) : 1);
    }
    const banet::ModelConfig cfg = a.model.config();
    const banet::ModelParams params = banet::bind_params(a.weights.load(cfg), cfg);
    const auto [left, right] = banet::random_views(a.height, a.width, a.weights.seed);
    const banet::BenchReport r = banet::bench([&] { return banet::forward(left, right, params, cfg); }, a.warmup, a.iters);
    const auto macs = banet::count_macs(cfg, a.height, a.width).total_macs;
    if (a.format == "table") {
        std::cout << "config " << config_name(cfg) << ", input " << a.width << "x" << a.height << ", " << r.mode << " ("
                  << r.threads << " threads), " << a.iters << " iters\n";
        std::cout << std::left << std::setw(14) << "stage" << std::right << std::setw(12) << "median ms" << std::setw(12)
                  << "p95 ms" << '\n';
        auto row = [](const char* name, const banet::LatencyStats& s) {
            std::cout << std::left << std::setw(14) << name << std::right << std::fixed << std::setprecision(2)
                      << std::setw(12) << s.median_ms << std::setw(12) << s.p95_ms << '\n';
        };
        row("features", r.features);
        row("correlation", r.correlation);
        row("aggregation", r.aggregation);
        row("regression", r.regression);
        row("end_to_end", r.end_to_end);
        return kExitOk;
    }
    json report{{"config", config_name(cfg)},
                {"height", a.height},
                {"width", a.width},
                {"warmup", r.warmup},
                {"iters", r.iters},
                {"threads", r.threads},
                {"mode", r.mode},
                {"total_macs", macs},
                {"stages",
                 {{"features", stats_json(r.features)},
                  {"correlation", stats_json(r.correlation)},
                  {"aggregation", stats_json(r.aggregation)},
                  {"regression", stats_json(r.regression)}}},
                {"end_to_end", stats_json(r.end_to_end)}};
    report.update(a.weights.describe());
    std::cout << report.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// selftest

struct SelftestArgs {
    double perturb = 0;
    int instances = 20;
    std::uint32_t seed = 0;
};

void setup_selftest(CLI::App& app, SelftestArgs& a) {
    auto* sub = app.add_subcommand("selftest", "Gradient checks, oracle equivalences and format round-trips");
    sub->add_option("--perturb-gradients", a.perturb,
                    "Test hook: add this constant to every analytic gradient before the check")
        ->capture_default_str();
    sub->add_option("--instances", a.instances, "Random instances per gradient op")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--seed", a.seed, "Seed for oracle and format fixtures")->capture_default_str();
}

int run_selftest(const SelftestArgs& a) {
    std::vector<selftest::Record> records;
    banet::FdOptions opt;
    opt.perturbation = a.perturb;
    for (const auto& op : banet::registered_grad_ops()) {
        bool all = true;
        double worst = 0;
        for (int s = 0; s < a.instances; ++s) {
            const banet::GradReport r = banet::fd_check(op, static_cast<std::uint64_t>(s), opt);
            all = all && r.passed();
            worst = std::max(worst, r.max_rel_error);
            if (!r.passed()) records.push_back(selftest::gradient_check(r));
        }
        if (all) {
            records.push_back({"gradient:" + op,
                               true,
                               {{"instances", a.instances}, {"max_rel_error", worst}, {"tolerance", banet::kGradTolerance}}});
        }
    }
    for (auto& r : selftest::oracle_checks(a.seed)) records.push_back(std::move(r));

    const fs::path dir = fs::temp_directory_path() / ("banet_selftest_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    for (auto& r : selftest::format_checks(dir, a.seed)) records.push_back(std::move(r));
    std::error_code ec;
    fs::remove_all(dir, ec);

    int failed = 0;
    for (const auto& r : records) {
        json line{{"check", r.check}, {"passed", r.passed}};
        line.update(r.detail);
        std::cout << line.dump() << '\n';
        failed += r.passed ? 0 : 1;
    }
    std::cout << json{{"summary", {{"checks", records.size()}, {"failed", failed}}}}.dump() << '\n';
    return failed ? kExitSelftest : kExitOk;
}

// ---------------------------------------------------------------------------
// init-weights

struct InitArgs {
    std::string out;
    std::uint64_t seed = 0;
    ModelFlags model;
};

void setup_init(CLI::App& app, InitArgs& a) {
    auto* sub = app.add_subcommand("init-weights", "Write a seeded random weight file for a configuration");
    sub->add_option("--out", a.out, "Output weight file")->required();
    sub->add_option("--seed", a.seed, "Random seed")->capture_default_str();
    a.model.attach(sub);
}

int run_init(const InitArgs& a) {
    const banet::ModelConfig cfg = a.model.config();
    const banet::WeightStore store = banet::init_random(cfg, a.seed);
    banet::save_weights(store, a.out);
    std::cout << json{{"path", a.out},
                      {"config", config_name(cfg)},
                      {"seed", a.seed},
                      {"tensors", store.size()},
                      {"parameters", store.parameter_count()}}
                     .dump(2)
              << '\n';
    return kExitOk;
}

int report_library_error(const banet::Error& e) {
    if (const auto* f = dynamic_cast<const banet::FormatError*>(&e)) {
        print_error("format", f->what(), {{"code", banet::to_string(f->code())}});
    } else if (const auto* p = dynamic_cast<const banet::ParameterError*>(&e)) {
        print_error("parameter", p->what(), {{"path", p->path()}});
    } else if (dynamic_cast<const banet::IoError*>(&e)) {
        print_error("io", e.what());
    } else if (dynamic_cast<const banet::ShapeError*>(&e)) {
        print_error("shape", e.what());
    } else {
        print_error("data", e.what());
    }
    return kExitData;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"BANet-2D stereo inference engine"};
    app.name("banet");
    app.require_subcommand(1);

    InferArgs infer;
    EvalArgs eval;
    MacsArgs macs;
    BenchArgs bench;
    SelftestArgs self;
    InitArgs init;
    setup_infer(app, infer);
    setup_eval(app, eval);
    setup_macs(app, macs);
    setup_bench(app, bench);
    setup_selftest(app, self);
    setup_init(app, init);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return kExitUsage;
    }

    try {
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "infer") return run_infer(infer);
        if (cmd == "eval") return run_eval(eval);
        if (cmd == "macs") return run_macs(macs);
        if (cmd == "bench") return run_bench(bench);
        if (cmd == "selftest") return run_selftest(self);
        if (cmd == "init-weights") return run_init(init);
        print_error("usage", "unknown subcommand " + cmd);
        return kExitUsage;
    } catch (const UsageError& e) {
        print_error("usage", e.what());
        return kExitUsage;
    } catch (const banet::Error& e) {
        return report_library_error(e);
    } catch (const std::exception& e) {
        print_error("data", e.what());
        return kExitData;
    }
}
