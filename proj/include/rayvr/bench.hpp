#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rayvr/accel.hpp"
#include "rayvr/camera.hpp"
#include "rayvr/graph.hpp"
#include "rayvr/scene.hpp"
#include "rayvr/tracer.hpp"

namespace rayvr {

/// Parses "WxH". Throws std::invalid_argument.
ImageSize parse_size(std::string_view text);

/// Projection from the scene camera's vertical FOV and the image aspect.
ProjectionParams scene_projection(const Scene& scene, ImageSize size);
/// Mono eye at the scene camera.
Eye scene_eye(const Scene& scene, ImageSize size);
/// Stereo rig around the scene camera; ipd defaults to the scene's.
StereoRig scene_rig(const Scene& scene, ImageSize size, std::optional<double> ipd_override = std::nullopt);

struct RenderOptions {
    std::filesystem::path scene;
    ImageSize size{512, 512};
    bool stereo = false;
    std::optional<double> ipd;
    RayGenMode mode = RayGenMode::InverseMatrix;
    std::optional<EffectId> effect_override;
    int spp = 1;
    int frames = 1;
    int max_depth = 1;
    int path_depth = 4;
    std::uint64_t seed = 0;
    int workers = 0;
    std::filesystem::path out = "out.png";
    std::optional<std::filesystem::path> stats;
    std::optional<std::filesystem::path> stats_csv;
    std::optional<std::filesystem::path> hdr_out;
    std::optional<std::string> dump_gbuffer;
};

/// Renders `frames` frames, writes the last one as PNG (side by side in
/// stereo), optional stats JSON/CSV, PFM and G-buffer channel dumps.
/// Returns a process exit code; errors are reported on `err`.
int cli_render(const RenderOptions& options, std::ostream& log, std::ostream& err);

/// One benchmark configuration.
struct BenchConfig {
    std::string table;  // "I" or "III"
    std::string label;  // row label
    bool stereo = false;
    RayGenMode mode = RayGenMode::InverseMatrix;
    EffectId effect = EffectId::Mirror;
};

struct BenchRow {
    std::string scene;
    BenchConfig config;
    int frames = 0;
    double mean_ms = 0.0;
    double stdev_ms = 0.0;
    double fps_equivalent = 0.0;
    RayCounters rays;  // last frame
};

struct BenchOptions {
    std::vector<std::filesystem::path> scenes;
    ImageSize size{512, 512};
    int frames = 5;
    int warmup = 1;
    int spp = 1;
    int max_depth = 1;
    int path_depth = 4;
    std::uint64_t seed = 0;
    int workers = 0;
    std::optional<double> ipd;
    /// Effect used for the ray-traced rows of the stereo/G-buffer table.
    EffectId table1_effect = EffectId::Mirror;
    std::string tables = "all";  // all | I | III
    std::optional<std::filesystem::path> csv;
};

/// Rows of the stereo/G-buffer table: {Raster, Inverse matrix, G-Buffer} x {mono, stereo}.
std::vector<BenchConfig> table1_configs(EffectId traced_effect);
/// Rows of the effect table: one per effect, mono and stereo.
std::vector<BenchConfig> table3_configs();

/// Mean/stdev of total frame ms over `frames` measured frames after `warmup`.
BenchRow measure(const Scene& scene, const Tlas& tlas, const BenchConfig& config, const BenchOptions& options,
                 Renderer& renderer);

std::vector<BenchRow> run_bench(const BenchOptions& options, std::ostream* progress);
std::string format_tables(const std::vector<BenchRow>& rows);
std::string rows_to_csv(const std::vector<BenchRow>& rows);
int cli_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);

}  // namespace rayvr
