// rayvr: render, bench and serve front end.
#include <iostream>

#include "CLI11.hpp"
#include "rayvr/bench.hpp"
#include "rayvr/service.hpp"

namespace {

rayvr::ImageSize size_or_throw(const std::string& text) {
    try {
        return rayvr::parse_size(text);
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("--size", e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stereo ray tracer with a rasterized G-buffer pre-pass"};
    app.require_subcommand(1);

    // render
    rayvr::RenderOptions ro;
    std::string render_size = "512x512";
    std::string render_effect;
    std::string stats_path, csv_path, hdr_path, gbuffer_channel;
    double render_ipd = -1.0;
    auto* render = app.add_subcommand("render", "Render a scene to PNG");
    render->add_option("--scene", ro.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    render->add_option("--size", render_size, "Per-eye size WxH")->capture_default_str();
    render->add_flag("--stereo", ro.stereo, "Render both eyes side by side");
    render->add_option("--ipd", render_ipd, "Interpupillary distance (default: scene's)")->check(CLI::NonNegativeNumber);
    std::string render_mode = "inverse";
    render->add_option("--mode", render_mode, "Ray generation")
        ->check(CLI::IsMember({"optimized", "inverse", "gbuffer"}))
        ->capture_default_str();
    render->add_option("--effect-override", render_effect, "Force every material to one effect")
        ->check(CLI::IsMember({"raster", "raster_shadows", "mirror", "path"}));
    render->add_option("--spp", ro.spp, "Samples per pixel per frame")->capture_default_str();
    render->add_option("--frames", ro.frames, "Frames to render (accumulated)")->capture_default_str();
    render->add_option("--max-depth", ro.max_depth, "Mirror recursion depth")->capture_default_str();
    render->add_option("--path-depth", ro.path_depth, "Path tracer bounce limit")->capture_default_str();
    render->add_option("--seed", ro.seed, "Sampling seed")->capture_default_str();
    render->add_option("--workers", ro.workers, "Worker threads (0 = all cores)")->capture_default_str();
    render->add_option("--out", ro.out, "Output PNG")->capture_default_str();
    render->add_option("--stats", stats_path, "Write last frame stats JSON");
    render->add_option("--stats-csv", csv_path, "Write per-frame stats CSV");
    render->add_option("--hdr-out", hdr_path, "Write HDR result as PFM");
    render->add_option("--dump-gbuffer", gbuffer_channel, "Dump a G-buffer channel")
        ->check(CLI::IsMember({"position", "normal", "material", "depth", "coverage"}));

    // bench
    rayvr::BenchOptions bo;
    std::string bench_size = "512x512";
    std::string bench_effect = "mirror";
    std::string bench_csv;
    double bench_ipd = -1.0;
    auto* bench = app.add_subcommand("bench", "Run the timing matrix and print tables");
    bench->add_option("--scene", bo.scenes, "Scene JSON (repeatable)")->required()->check(CLI::ExistingFile);
    bench->add_option("--size", bench_size, "Per-eye size WxH")->capture_default_str();
    bench->add_option("--frames", bo.frames, "Measured frames per row")->capture_default_str();
    bench->add_option("--warmup", bo.warmup, "Unmeasured frames per row")->capture_default_str();
    bench->add_option("--spp", bo.spp)->capture_default_str();
    bench->add_option("--max-depth", bo.max_depth)->capture_default_str();
    bench->add_option("--path-depth", bo.path_depth)->capture_default_str();
    bench->add_option("--seed", bo.seed)->capture_default_str();
    bench->add_option("--workers", bo.workers)->capture_default_str();
    bench->add_option("--ipd", bench_ipd)->check(CLI::NonNegativeNumber);
    bench->add_option("--tables", bo.tables, "all, I or III")
        ->check(CLI::IsMember({"all", "I", "III"}))
        ->capture_default_str();
    bench->add_option("--table1-effect", bench_effect, "Effect for the traced rows of table I")
        ->check(CLI::IsMember({"raster", "raster_shadows", "mirror", "path"}))
        ->capture_default_str();
    bench->add_option("--csv", bench_csv, "Write rows as CSV");

    // serve
    std::filesystem::path serve_scene;
    std::string bind = "127.0.0.1:8080";
    std::string serve_size = "256x256";
    std::string serve_mode = "inverse";
    rayvr::SessionConfig sc;
    bool mono = false;
    double serve_ipd = -1.0;
    auto* srv = app.add_subcommand("serve", "Live tuning service over HTTP");
    srv->add_option("--scene", serve_scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    srv->add_option("--bind", bind, "HOST:PORT")->capture_default_str();
    srv->add_option("--size", serve_size, "Per-eye size WxH")->capture_default_str();
    srv->add_flag("--mono", mono, "Render a single eye");
    srv->add_option("--ipd", serve_ipd)->check(CLI::NonNegativeNumber);
    srv->add_option("--mode", serve_mode)->check(CLI::IsMember({"optimized", "inverse", "gbuffer"}))->capture_default_str();
    srv->add_option("--spp", sc.settings.spp)->capture_default_str();
    srv->add_option("--max-depth", sc.settings.max_depth)->capture_default_str();
    srv->add_option("--snapshot-spp", sc.snapshot_spp)->capture_default_str();
    srv->add_option("--workers", sc.workers)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*render) {
            ro.size = size_or_throw(render_size);
            ro.mode = rayvr::parse_raygen_mode(render_mode);
            if (render_ipd >= 0.0) ro.ipd = render_ipd;
            if (!render_effect.empty()) ro.effect_override = rayvr::parse_effect(render_effect);
            if (!stats_path.empty()) ro.stats = stats_path;
            if (!csv_path.empty()) ro.stats_csv = csv_path;
            if (!hdr_path.empty()) ro.hdr_out = hdr_path;
            if (!gbuffer_channel.empty()) ro.dump_gbuffer = gbuffer_channel;
            return rayvr::cli_render(ro, std::cout, std::cerr);
        }
        if (*bench) {
            bo.size = size_or_throw(bench_size);
            if (bench_ipd >= 0.0) bo.ipd = bench_ipd;
            bo.table1_effect = rayvr::parse_effect(bench_effect);
            if (!bench_csv.empty()) bo.csv = bench_csv;
            return rayvr::cli_bench(bo, std::cout, std::cerr);
        }
        sc.size = size_or_throw(serve_size);
        sc.stereo = !mono;
        if (serve_ipd >= 0.0) sc.ipd = serve_ipd;
        sc.settings.raygen_mode = rayvr::parse_raygen_mode(serve_mode);
        return rayvr::serve(serve_scene, bind, sc, std::cout, std::cerr);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
