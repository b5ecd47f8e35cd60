#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rayvr/accel.hpp"
#include "rayvr/camera.hpp"
#include "rayvr/gbuffer.hpp"
#include "rayvr/image.hpp"
#include "rayvr/parallel.hpp"
#include "rayvr/scene.hpp"
#include "rayvr/tracer.hpp"

namespace rayvr {

enum class PassId { GBuffer, Trace, Accumulate, Tonemap, Compose };

std::string_view to_string(PassId pass);

struct PassDecl {
    PassId id;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

class GraphError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Ordered per-eye pass chain. Resources named in `external` (scene, camera,
/// history) exist before the first pass.
class RenderGraph {
public:
    void add_pass(PassDecl pass);
    /// Throws GraphError if a pass reads something no earlier pass (or the
    /// outside world) produced, or if a resource is produced twice.
    void validate() const;
    /// Same passes in a new order; throws GraphError unless the order is a
    /// valid topological order or names an unknown or missing pass.
    RenderGraph reordered(const std::vector<PassId>& order) const;

    bool has(PassId id) const;
    const std::vector<PassDecl>& passes() const { return passes_; }
    std::vector<std::string> pass_names() const;

    static const std::vector<std::string>& external_resources();

private:
    std::vector<PassDecl> passes_;
};

/// gbuffer? -> trace -> accumulate? -> tonemap -> compose.
/// G-buffer iff GBufferDerived mode or any Raster/RasterShadows material;
/// accumulate iff any PathTraced material.
RenderGraph build_graph(const TraceSettings& settings, const Scene& scene);

struct FrameStats {
    std::uint64_t frame = 0;
    /// Frames folded into the accumulation buffer (0 without accumulation).
    int accumulated_frames = 0;
    std::vector<std::pair<std::string, double>> passes;  // ms, graph order
    double total_ms = 0.0;
    RayCounters rays;
    ImageSize size{};
    bool stereo = false;

    double pass_ms(std::string_view name) const;
};

nlohmann::json stats_to_json(const FrameStats& stats);
std::string stats_csv_header();
std::string stats_csv_row(const FrameStats& stats);

struct FrameOutput {
    std::vector<HdrImage> hdr;  // per eye, after accumulation
    std::vector<LdrImage> ldr;  // per eye, tone mapped
    LdrImage composed;          // side by side for stereo
    std::vector<GBuffer> gbuffers;
    FrameStats stats;
};

/// Executes a graph per eye with accumulation history across frames.
class Renderer {
public:
    explicit Renderer(int workers = 1);

    FrameOutput render_frame(const Scene& scene, const Tlas& tlas, std::span<const Eye> eyes, ImageSize size,
                             const TraceSettings& settings, const RenderGraph& graph);
    FrameOutput render_frame(const Scene& scene, const Tlas& tlas, const StereoRig& rig, ImageSize size,
                             const TraceSettings& settings);
    FrameOutput render_frame(const Scene& scene, const Tlas& tlas, const Eye& eye, ImageSize size,
                             const TraceSettings& settings);

    void reset_accumulation();
    int workers() const { return pool_.size(); }
    WorkerPool& pool() { return pool_; }

private:
    struct EyeHistory {
        Accumulator accumulator;
        std::optional<Eye> last_eye;
    };

    WorkerPool pool_;
    std::vector<EyeHistory> history_;
    std::uint64_t frame_ = 0;
    // Accumulation key besides camera pose.
    const Scene* last_scene_ = nullptr;
    std::uint64_t last_revision_ = 0;
    std::optional<TraceSettings> last_settings_;
    ImageSize last_size_{};
};

/// Renders one eye's HDR trace pass. Exposed for tests and benchmarks.
HdrImage trace_image(const Scene& scene, const Tlas& tlas, const Eye& eye, ImageSize size, const GBuffer* gbuffer,
                     const TraceSettings& settings, std::uint32_t eye_index, std::uint32_t frame, WorkerPool& pool,
                     RayCounters* counters = nullptr);

}  // namespace rayvr
