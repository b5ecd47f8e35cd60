#include "rayvr/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace rayvr {

using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

std::string_view to_string(PassId pass) {
    switch (pass) {
        case PassId::GBuffer: return "gbuffer";
        case PassId::Trace: return "trace";
        case PassId::Accumulate: return "accumulate";
        case PassId::Tonemap: return "tonemap";
        case PassId::Compose: return "compose";
    }
    return "?";
}

const std::vector<std::string>& RenderGraph::external_resources() {
    static const std::vector<std::string> names = {"scene", "camera", "history"};
    return names;
}

void RenderGraph::add_pass(PassDecl pass) { passes_.push_back(std::move(pass)); }

void RenderGraph::validate() const {
    std::set<std::string> available(external_resources().begin(), external_resources().end());
    std::set<PassId> seen;
    for (const PassDecl& p : passes_) {
        if (!seen.insert(p.id).second) throw GraphError("pass '" + std::string(to_string(p.id)) + "' appears twice");
        for (const std::string& in : p.inputs) {
            if (!available.count(in)) {
                throw GraphError("pass '" + std::string(to_string(p.id)) + "' reads '" + in + "' before it is produced");
            }
        }
        for (const std::string& out : p.outputs) {
            if (!available.insert(out).second) throw GraphError("resource '" + out + "' produced twice");
        }
    }
}

RenderGraph RenderGraph::reordered(const std::vector<PassId>& order) const {
    if (order.size() != passes_.size()) throw GraphError("reorder must name every pass exactly once");
    RenderGraph g;
    for (PassId id : order) {
        auto it = std::find_if(passes_.begin(), passes_.end(), [&](const PassDecl& p) { return p.id == id; });
        if (it == passes_.end()) throw GraphError("reorder names unknown pass '" + std::string(to_string(id)) + "'");
        g.add_pass(*it);
    }
    g.validate();
    return g;
}

bool RenderGraph::has(PassId id) const {
    return std::any_of(passes_.begin(), passes_.end(), [&](const PassDecl& p) { return p.id == id; });
}

std::vector<std::string> RenderGraph::pass_names() const {
    std::vector<std::string> names;
    for (const PassDecl& p : passes_) names.emplace_back(to_string(p.id));
    return names;
}

RenderGraph build_graph(const TraceSettings& settings, const Scene& scene) {
    bool raster = false;
    bool path = false;
    for (const Material& m : scene.materials) {
        raster |= m.effect == EffectId::Raster || m.effect == EffectId::RasterShadows;
        path |= m.effect == EffectId::PathTraced;
    }
    const bool gbuffer = settings.raygen_mode == RayGenMode::GBufferDerived || raster;

    RenderGraph g;
    if (gbuffer) g.add_pass({PassId::GBuffer, {"scene", "camera"}, {"gbuffer"}});
    std::vector<std::string> trace_in = {"scene", "camera"};
    if (gbuffer) trace_in.push_back("gbuffer");
    g.add_pass({PassId::Trace, trace_in, {"radiance"}});
    if (path) g.add_pass({PassId::Accumulate, {"radiance", "history"}, {"accumulated"}});
    g.add_pass({PassId::Tonemap, {path ? "accumulated" : "radiance"}, {"ldr"}});
    g.add_pass({PassId::Compose, {"ldr"}, {"frame"}});
    g.validate();
    return g;
}

double FrameStats::pass_ms(std::string_view name) const {
    for (const auto& [n, ms] : passes) {
        if (n == name) return ms;
    }
    return 0.0;
}

nlohmann::json stats_to_json(const FrameStats& s) {
    nlohmann::json passes = nlohmann::json::object();
    for (const auto& [name, ms] : s.passes) passes[name] = ms;
    return {{"frame", s.frame},
            {"accumulated_frames", s.accumulated_frames},
            {"passes", passes},
            {"total_ms", s.total_ms},
            {"rays",
             {{"primary", s.rays.primary},
              {"shadow", s.rays.shadow},
              {"reflection", s.rays.reflection},
              {"indirect", s.rays.indirect},
              {"total", s.rays.total()}}},
            {"width", s.size.width},
            {"height", s.size.height},
            {"stereo", s.stereo}};
}

std::string stats_csv_header() {
    return "frame,total_ms,gbuffer_ms,trace_ms,accumulate_ms,tonemap_ms,compose_ms,rays_primary,rays_shadow,"
           "rays_reflection,rays_indirect,accumulated_frames";
}

std::string stats_csv_row(const FrameStats& s) {
    std::ostringstream out;
    out << s.frame << ',' << s.total_ms;
    for (PassId p : {PassId::GBuffer, PassId::Trace, PassId::Accumulate, PassId::Tonemap, PassId::Compose}) {
        out << ',' << s.pass_ms(to_string(p));
    }
    out << ',' << s.rays.primary << ',' << s.rays.shadow << ',' << s.rays.reflection << ',' << s.rays.indirect << ','
        << s.accumulated_frames;
    return out.str();
}

HdrImage trace_image(const Scene& scene, const Tlas& tlas, const Eye& eye, ImageSize size, const GBuffer* gbuffer,
                     const TraceSettings& settings, std::uint32_t eye_index, std::uint32_t frame, WorkerPool& pool,
                     RayCounters* counters) {
    HdrImage out(size);
    const int tiles = tile_count(size);
    std::vector<RayCounters> per_tile(tiles);
    pool.run(tiles, [&](int index) {
        const Tile t = tile_at(size, index);
        const TraceContext ctx{scene, tlas, settings, &per_tile[index]};
        for (int y = t.y0; y < t.y1; ++y) {
            for (int x = t.x0; x < t.x1; ++x) {
                out.at(x, y) = trace_pixel_dispatch({x, y}, size, eye, gbuffer, ctx, eye_index, frame);
            }
        }
    });
    if (counters) {
        for (const RayCounters& c : per_tile) *counters += c;
    }
    return out;
}

Renderer::Renderer(int workers) : pool_(workers) {}

void Renderer::reset_accumulation() {
    for (EyeHistory& h : history_) h.accumulator.reset();
}

namespace {

bool same_settings(const TraceSettings& a, const TraceSettings& b) {
    return a.max_depth == b.max_depth && a.path_max_depth == b.path_max_depth && a.spp == b.spp && a.seed == b.seed &&
           a.raygen_mode == b.raygen_mode;
}

}  // namespace

FrameOutput Renderer::render_frame(const Scene& scene, const Tlas& tlas, std::span<const Eye> eyes, ImageSize size,
                                   const TraceSettings& settings, const RenderGraph& graph) {
    settings.validate();
    graph.validate();
    if (eyes.empty()) throw std::invalid_argument("render_frame: no eyes");
    const auto start = Clock::now();

    const bool invalidate = last_scene_ != &scene || last_revision_ != scene.revision() || !last_settings_ ||
                            !same_settings(*last_settings_, settings) || !(last_size_ == size) ||
                            history_.size() != eyes.size();
    if (history_.size() != eyes.size()) history_.assign(eyes.size(), {});
    last_scene_ = &scene;
    last_revision_ = scene.revision();
    last_settings_ = settings;
    last_size_ = size;

    FrameOutput out;
    out.stats.frame = frame_++;
    out.stats.size = size;
    out.stats.stereo = eyes.size() == 2;
    std::vector<double> pass_ms(5, 0.0);
    auto slot = [](PassId p) { return static_cast<std::size_t>(p); };

    for (std::size_t e = 0; e < eyes.size(); ++e) {
        const Eye& eye = eyes[e];
        EyeHistory& hist = history_[e];
        const bool moved = !hist.last_eye || eye_distance(*hist.last_eye, eye) > 1e-9;
        const bool reset = invalidate || moved;
        hist.last_eye = eye;
        if (reset) hist.accumulator.reset();
        // RNG frame key: position in the current accumulation run.
        const auto rng_frame = static_cast<std::uint32_t>(hist.accumulator.frame_index());

        std::optional<GBuffer> gbuffer;
        HdrImage radiance;
        HdrImage result;
        for (const PassDecl& pass : graph.passes()) {
            const auto t0 = Clock::now();
            switch (pass.id) {
                case PassId::GBuffer:
                    gbuffer = rasterize_gbuffer(scene, eye, size, &pool_);
                    break;
                case PassId::Trace:
                    radiance = trace_image(scene, tlas, eye, size, gbuffer ? &*gbuffer : nullptr, settings,
                                           static_cast<std::uint32_t>(e), rng_frame, pool_, &out.stats.rays);
                    result = radiance;
                    break;
                case PassId::Accumulate:
                    result = hist.accumulator.accumulate(radiance, reset);
                    out.stats.accumulated_frames = hist.accumulator.frame_index();
                    break;
                case PassId::Tonemap:
                    out.ldr.push_back(tonemap(result));
                    break;
                case PassId::Compose:
                    continue;  // once per frame, below
            }
            pass_ms[slot(pass.id)] += ms_since(t0);
        }
        if (!graph.has(PassId::Accumulate)) hist.accumulator.reset();
        out.hdr.push_back(std::move(result));
        if (gbuffer) out.gbuffers.push_back(std::move(*gbuffer));
    }

    if (graph.has(PassId::Compose)) {
        const auto t0 = Clock::now();
        out.composed = out.ldr.size() == 2 ? side_by_side(out.ldr[0], out.ldr[1]) : out.ldr.front();
        pass_ms[slot(PassId::Compose)] += ms_since(t0);
    }
    for (const PassDecl& pass : graph.passes()) {
        out.stats.passes.emplace_back(std::string(to_string(pass.id)), pass_ms[slot(pass.id)]);
    }
    out.stats.total_ms = ms_since(start);
    return out;
}

FrameOutput Renderer::render_frame(const Scene& scene, const Tlas& tlas, const StereoRig& rig, ImageSize size,
                                   const TraceSettings& settings) {
    const Eye eyes[2] = {rig.left, rig.right};
    return render_frame(scene, tlas, eyes, size, settings, build_graph(settings, scene));
}

FrameOutput Renderer::render_frame(const Scene& scene, const Tlas& tlas, const Eye& eye, ImageSize size,
                                   const TraceSettings& settings) {
    return render_frame(scene, tlas, std::span<const Eye>(&eye, 1), size, settings, build_graph(settings, scene));
}

}  // namespace rayvr
