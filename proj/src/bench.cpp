#include "rayvr/bench.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "rayvr/scene_json.hpp"

namespace rayvr {

ImageSize parse_size(std::string_view text) {
    const auto x = text.find('x');
    if (x == std::string_view::npos) throw std::invalid_argument("size must look like WxH");
    ImageSize s;
    const auto a = std::from_chars(text.data(), text.data() + x, s.width);
    const auto b = std::from_chars(text.data() + x + 1, text.data() + text.size(), s.height);
    if (a.ec != std::errc{} || a.ptr != text.data() + x || b.ec != std::errc{} ||
        b.ptr != text.data() + text.size() || s.width <= 0 || s.height <= 0) {
        throw std::invalid_argument("size must look like WxH with positive integers");
    }
    return s;
}

ProjectionParams scene_projection(const Scene& scene, ImageSize size) {
    ProjectionParams p;
    p.fov_y = radians(scene.camera.fov_y_deg);
    p.aspect = size.aspect();
    p.validate();
    return p;
}

Eye scene_eye(const Scene& scene, ImageSize size) {
    return make_eye(scene.camera.pose(), scene_projection(scene, size));
}

StereoRig scene_rig(const Scene& scene, ImageSize size, std::optional<double> ipd_override) {
    return make_stereo_rig(scene.camera.pose(), ipd_override.value_or(scene.camera.ipd), scene_projection(scene, size));
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

std::filesystem::path channel_path(const std::filesystem::path& out, const std::string& channel, std::size_t eye,
                                   std::size_t eyes) {
    std::string stem = out.stem().string() + "_gbuffer_" + channel;
    if (eyes == 2) stem += eye == 0 ? "_left" : "_right";
    return out.parent_path() / (stem + ".png");
}

}  // namespace

int cli_render(const RenderOptions& o, std::ostream& log, std::ostream& err) {
    try {
        Scene scene = load_scene(o.scene);
        if (o.effect_override) override_all_effects(scene, *o.effect_override);
        TraceSettings settings;
        settings.max_depth = o.max_depth;
        settings.path_max_depth = o.path_depth;
        settings.spp = o.spp;
        settings.seed = o.seed;
        settings.raygen_mode = o.mode;
        settings.validate();
        if (o.frames < 1) throw std::invalid_argument("frames must be >= 1");

        const Tlas tlas = build_accel(scene);
        Renderer renderer(o.workers);
        RenderGraph graph = build_graph(settings, scene);
        if (o.dump_gbuffer && !graph.has(PassId::GBuffer)) {
            // A dump needs the rasterized buffers even when shading does not.
            RenderGraph with_gbuffer;
            with_gbuffer.add_pass({PassId::GBuffer, {"scene", "camera"}, {"gbuffer"}});
            for (const PassDecl& p : graph.passes()) with_gbuffer.add_pass(p);
            graph = with_gbuffer;
        }
        std::vector<Eye> eyes;
        if (o.stereo) {
            const StereoRig rig = scene_rig(scene, o.size, o.ipd);
            eyes = {rig.left, rig.right};
        } else {
            eyes = {scene_eye(scene, o.size)};
        }

        std::string csv = stats_csv_header() + "\n";
        FrameOutput frame;
        for (int f = 0; f < o.frames; ++f) {
            frame = renderer.render_frame(scene, tlas, eyes, o.size, settings, graph);
            csv += stats_csv_row(frame.stats) + "\n";
        }
        write_png(o.out, frame.composed);
        log << "wrote " << o.out.string() << " (" << frame.composed.width << "x" << frame.composed.height << ", "
            << std::fixed << std::setprecision(1) << frame.stats.total_ms << " ms last frame)\n";
        if (o.hdr_out) {
            write_pfm(*o.hdr_out, frame.hdr.size() == 2 ? side_by_side(frame.hdr[0], frame.hdr[1]) : frame.hdr[0]);
        }
        if (o.stats) write_text(*o.stats, stats_to_json(frame.stats).dump(2) + "\n");
        if (o.stats_csv) write_text(*o.stats_csv, csv);
        if (o.dump_gbuffer) {
            for (std::size_t e = 0; e < frame.gbuffers.size(); ++e) {
                const auto path = channel_path(o.out, *o.dump_gbuffer, e, frame.gbuffers.size());
                write_png(path, gbuffer_channel_image(frame.gbuffers[e], *o.dump_gbuffer, scene));
                log << "wrote " << path.string() << "\n";
            }
        }
        return 0;
    } catch (const std::exception& e) {
        err << "render: " << e.what() << "\n";
        return 1;
    }
}

std::vector<BenchConfig> table1_configs(EffectId traced) {
    std::vector<BenchConfig> rows;
    for (bool stereo : {false, true}) {
        rows.push_back({"I", "Raster", stereo, RayGenMode::InverseMatrix, EffectId::Raster});
        rows.push_back({"I", "Inverse matrix", stereo, RayGenMode::InverseMatrix, traced});
        rows.push_back({"I", "G-Buffer", stereo, RayGenMode::GBufferDerived, traced});
    }
    return rows;
}

std::vector<BenchConfig> table3_configs() {
    std::vector<BenchConfig> rows;
    const char* labels[] = {"Raster", "Raster + shadows", "Mirror + shadows", "Path traced"};
    for (bool stereo : {false, true}) {
        for (EffectId fx : kAllEffects) {
            rows.push_back({"III", labels[static_cast<int>(fx)], stereo, RayGenMode::InverseMatrix, fx});
        }
    }
    return rows;
}

BenchRow measure(const Scene& base, const Tlas& tlas, const BenchConfig& config, const BenchOptions& o,
                 Renderer& renderer) {
    Scene scene = base;
    override_all_effects(scene, config.effect);
    TraceSettings settings;
    settings.max_depth = o.max_depth;
    settings.path_max_depth = o.path_depth;
    settings.spp = o.spp;
    settings.seed = o.seed;
    settings.raygen_mode = config.mode;
    const RenderGraph graph = build_graph(settings, scene);

    std::vector<Eye> eyes;
    if (config.stereo) {
        const StereoRig rig = scene_rig(scene, o.size, o.ipd);
        eyes = {rig.left, rig.right};
    } else {
        eyes = {scene_eye(scene, o.size)};
    }
    renderer.reset_accumulation();
    BenchRow row;
    row.config = config;
    std::vector<double> ms;
    for (int f = 0; f < o.warmup + o.frames; ++f) {
        const FrameOutput out = renderer.render_frame(scene, tlas, eyes, o.size, settings, graph);
        if (f >= o.warmup) ms.push_back(out.stats.total_ms);
        row.rays = out.stats.rays;
    }
    row.frames = static_cast<int>(ms.size());
    row.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / ms.size();
    double var = 0.0;
    for (double m : ms) var += (m - row.mean_ms) * (m - row.mean_ms);
    row.stdev_ms = ms.size() > 1 ? std::sqrt(var / (ms.size() - 1)) : 0.0;
    row.fps_equivalent = row.mean_ms > 0.0 ? 1000.0 / row.mean_ms : 0.0;
    return row;
}

std::vector<BenchRow> run_bench(const BenchOptions& o, std::ostream* progress) {
    if (o.frames < 1) throw std::invalid_argument("frames must be >= 1");
    std::vector<BenchConfig> configs;
    if (o.tables == "all" || o.tables == "I") {
        const auto t = table1_configs(o.table1_effect);
        configs.insert(configs.end(), t.begin(), t.end());
    }
    if (o.tables == "all" || o.tables == "III") {
        const auto t = table3_configs();
        configs.insert(configs.end(), t.begin(), t.end());
    }
    if (configs.empty()) throw std::invalid_argument("tables must be all, I or III");

    Renderer renderer(o.workers);
    std::vector<BenchRow> rows;
    for (const auto& path : o.scenes) {
        const Scene scene = load_scene(path);
        const Tlas tlas = build_accel(scene);
        for (const BenchConfig& c : configs) {
            BenchRow row = measure(scene, tlas, c, o, renderer);
            row.scene = path.stem().string();
            if (progress) {
                *progress << row.scene << " [" << c.table << "] " << c.label << (c.stereo ? " stereo" : " mono")
                          << ": " << std::fixed << std::setprecision(1) << row.mean_ms << " ms\n";
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string format_tables(const std::vector<BenchRow>& rows) {
    // One block per (scene, table); columns mono | stereo.
    std::ostringstream out;
    std::vector<std::pair<std::string, std::string>> blocks;
    for (const BenchRow& r : rows) {
        const std::pair key{r.scene, r.config.table};
        if (std::find(blocks.begin(), blocks.end(), key) == blocks.end()) blocks.push_back(key);
    }
    auto cell = [](const BenchRow* r) {
        if (!r) return std::string("-");
        std::ostringstream c;
        c << std::fixed << std::setprecision(1) << r->mean_ms << " +/- " << r->stdev_ms << " ms ("
          << std::setprecision(2) << r->fps_equivalent << " fps)";
        return c.str();
    };
    for (const auto& [scene, table] : blocks) {
        out << "Table " << table << " - " << scene
            << (table == "I" ? " (G-buffer pre-pass and stereo impact)" : " (effect impact)") << "\n";
        std::vector<std::string> labels;
        for (const BenchRow& r : rows) {
            if (r.scene == scene && r.config.table == table &&
                std::find(labels.begin(), labels.end(), r.config.label) == labels.end()) {
                labels.push_back(r.config.label);
            }
        }
        out << std::left << std::setw(20) << "config" << std::setw(34) << "mono" << "stereo\n";
        for (const std::string& label : labels) {
            const BenchRow* mono = nullptr;
            const BenchRow* stereo = nullptr;
            for (const BenchRow& r : rows) {
                if (r.scene != scene || r.config.table != table || r.config.label != label) continue;
                (r.config.stereo ? stereo : mono) = &r;
            }
            out << std::left << std::setw(20) << label << std::setw(34) << cell(mono) << cell(stereo) << "\n";
        }
        out << "\n";
    }
    return out.str();
}

std::string rows_to_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << "scene,table,config,stereo,mode,effect,frames,mean_ms,stdev_ms,fps_equivalent,rays_primary,rays_shadow,"
           "rays_reflection,rays_indirect\n";
    for (const BenchRow& r : rows) {
        out << r.scene << ',' << r.config.table << ',' << r.config.label << ',' << (r.config.stereo ? 1 : 0) << ','
            << to_string(r.config.mode) << ',' << to_string(r.config.effect) << ',' << r.frames << ',' << r.mean_ms
            << ',' << r.stdev_ms << ',' << r.fps_equivalent << ',' << r.rays.primary << ',' << r.rays.shadow << ','
            << r.rays.reflection << ',' << r.rays.indirect << "\n";
    }
    return out.str();
}

int cli_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
    try {
        const auto rows = run_bench(o, &err);
        out << format_tables(rows);
        if (o.csv) write_text(*o.csv, rows_to_csv(rows));
        return 0;
    } catch (const std::exception& e) {
        err << "bench: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace rayvr
