#include "panoworld/cli.hpp"

#include "panoworld/reproject.hpp"
#include "panoworld/world.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace pano::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void setup_logging(const std::string& level)
{
    static const auto logger = [] {
        auto l = spdlog::stderr_color_mt("panoworld");
        spdlog::set_default_logger(l);
        return l;
    }();
    logger->set_level(spdlog::level::from_str(level));
}

Displacement checked_displacement(double step, double direction)
{
    if (!(step >= 0.0 && step < 1.0)) {
        throw UsageError(fmt::format("--step {} is out of range: must be in [0, 1)", step));
    }
    return Displacement(step, direction);
}

struct ReprojectArgs {
    std::string input;
    std::string output;
    double step = 0.0;
    double direction = 0.0;
    std::string method = "oracle3d";
    std::string interp = "bilinear";
};

struct ValidateArgs {
    int width = 2048;
    double step = 0.0;
    double direction = 0.0;
    std::string report;
};

struct BuildArgs {
    std::string config;
    std::string out;
    std::string restorer;
    std::string endpoint;
    std::string export_dir;
    std::string viewer_assets;
};

int cmd_reproject(const ReprojectArgs& a, unsigned threads, bool as_json, std::ostream& out)
{
    const Displacement disp = checked_displacement(a.step, a.direction);
    const auto method = parse_remap_method(a.method);
    const auto interp = parse_interpolation(a.interp);
    if (!method || !interp) {
        throw UsageError("--method must be oracle3d|paper-separable and --interp bilinear|nearest");
    }
    const EquirectImage input = load_image(a.input);
    const EquirectImage result = reproject_image(input, disp, *method, *interp, {threads});
    save_png(result, a.output);

    if (as_json) {
        out << json{{"command", "reproject"},
                    {"input", a.input},
                    {"output", a.output},
                    {"width", result.width()},
                    {"height", result.height()},
                    {"step", disp.step()},
                    {"direction", disp.direction_deg()},
                    {"method", std::string(to_string(*method))},
                    {"interpolation", std::string(to_string(*interp))}}
                   .dump()
            << "\n";
    } else {
        out << fmt::format("wrote {} ({}x{})\n", a.output, result.width(), result.height());
    }
    return ok;
}

int cmd_validate_math(const ValidateArgs& a, unsigned threads, bool as_json, std::ostream& out)
{
    const Displacement disp = checked_displacement(a.step, a.direction);
    if (a.width < 2 || a.width % 2 != 0) {
        throw UsageError(fmt::format("--width {} must be an even number >= 2", a.width));
    }
    const ImageDims dims = ImageDims::from_width(a.width);
    const MethodComparison r = compare_methods(dims, disp, {threads});
    constexpr double kEquatorTolerance = 1e-9;
    const bool pass = r.equator_max_error < kEquatorTolerance;

    const json summary = {
        {"command", "validate-math"},
        {"width", dims.width()},
        {"height", dims.height()},
        {"step", disp.step()},
        {"direction", disp.direction_deg()},
        {"max_error_rad", r.max_error},
        {"mean_error_rad", r.mean_error},
        {"worst_pixel", {r.worst_x, r.worst_y}},
        {"equator_max_error_rad", r.equator_max_error},
        {"equator_tolerance_rad", kEquatorTolerance},
        {"pass", pass},
    };
    if (!a.report.empty()) {
        std::ofstream rep(a.report, std::ios::trunc);
        rep << summary.dump(2) << "\n";
        if (!rep) {
            throw std::runtime_error(fmt::format("cannot write report {}", a.report));
        }
    }
    if (as_json) {
        out << summary.dump() << "\n";
    } else {
        out << fmt::format("full frame: max {:.6e} rad, mean {:.6e} rad, worst pixel ({}, {})\n", r.max_error,
                           r.mean_error, r.worst_x, r.worst_y);
        out << fmt::format("equator:    max {:.6e} rad ({})\n", r.equator_max_error, pass ? "ok" : "FAIL");
    }
    return pass ? ok : runtime_failure;
}

int cmd_build_world(const BuildArgs& a, unsigned threads, bool as_json, std::ostream& out, std::ostream& err)
{
    WorldConfig cfg;
    try {
        cfg = load_world_config(a.config);
        if (!a.out.empty()) {
            cfg.output_dir = a.out;
        }
        if (!a.restorer.empty()) {
            const auto kind = parse_restorer_kind(a.restorer);
            if (!kind) {
                throw UsageError("--restorer must be identity or http");
            }
            cfg.restorer.kind = *kind;
        }
        cfg.restorer = with_env_overrides(cfg.restorer);
        if (!a.endpoint.empty()) {
            cfg.restorer.endpoint = a.endpoint;
        }
        validate_config(cfg);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }

    auto summarize = [&](const WorldGraph& g, const char* status) {
        if (as_json) {
            out << json{{"command", "build-world"},
                        {"status", status},
                        {"output", cfg.output_dir.string()},
                        {"scenes", g.scenes.size()},
                        {"edges", g.edges.size()}}
                       .dump()
                << "\n";
        } else {
            out << fmt::format("{}: {} scene(s), {} edge(s) in {}\n", status, g.scenes.size(), g.edges.size(),
                               cfg.output_dir.string());
        }
    };

    WorldGraph graph;
    try {
        graph = build_world(cfg, {.parallelism = {threads}});
    } catch (const WorldBuildError& e) {
        err << "build-world: " << e.what() << "\n";
        summarize(e.partial(), "partial");
        return partial_build;
    }

    if (!a.export_dir.empty()) {
        std::optional<fs::path> assets;
        if (!a.viewer_assets.empty()) {
            assets = a.viewer_assets;
        }
        try {
            export_viewer(graph, cfg.output_dir, a.export_dir, assets);
        } catch (const ExportError& e) {
            for (const auto& f : e.failures()) {
                err << "export: " << f << "\n";
            }
            throw;
        }
    }
    summarize(graph, "complete");
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Panorama translation and world building"};
    app.require_subcommand(1);

    unsigned threads = 0;
    bool as_json = false;
    std::string log_level = "warn";
    app.add_option("--threads", threads, "worker threads (0 = all logical cores)");
    app.add_flag("--json", as_json, "machine-readable summary on stdout");
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    ReprojectArgs rp;
    auto* reproject = app.add_subcommand("reproject", "render the panorama seen after moving the observer");
    reproject->add_option("--input", rp.input, "input PNG/JPEG panorama")->required()->check(CLI::ExistingFile);
    reproject->add_option("--output", rp.output, "output PNG")->required();
    reproject->add_option("--step", rp.step, "displacement as a fraction of the radius, [0, 1)")->required();
    reproject->add_option("--direction", rp.direction, "displacement azimuth in degrees")->required();
    reproject->add_option("--method", rp.method)->check(CLI::IsMember({"oracle3d", "paper-separable"}));
    reproject->add_option("--interp", rp.interp)->check(CLI::IsMember({"bilinear", "nearest"}));

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate-math", "compare the exact and separable mappings");
    validate->add_option("--width", va.width, "panorama width in pixels")->required();
    validate->add_option("--step", va.step)->required();
    validate->add_option("--direction", va.direction)->required();
    validate->add_option("--report", va.report, "write the JSON report here");

    BuildArgs ba;
    auto* build = app.add_subcommand("build-world", "run the move/distort/restore chain");
    build->add_option("--config", ba.config, "world config JSON")->required()->check(CLI::ExistingFile);
    build->add_option("--out", ba.out, "output directory (overrides the config)");
    build->add_option("--restorer", ba.restorer)->check(CLI::IsMember({"identity", "http"}));
    build->add_option("--endpoint", ba.endpoint, "restorer base URL");
    build->add_option("--export", ba.export_dir, "also write a viewer bundle here");
    build->add_option("--viewer-assets", ba.viewer_assets, "built viewer files to include in the bundle")
        ->check(CLI::ExistingDirectory);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << "run with --help for usage\n";
        return usage;
    }

    setup_logging(log_level);
    try {
        if (*reproject) {
            return cmd_reproject(rp, threads, as_json, out);
        }
        if (*validate) {
            return cmd_validate_math(va, threads, as_json, out);
        }
        return cmd_build_world(ba, threads, as_json, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return runtime_failure;
    }
}

}  // namespace pano::cli
