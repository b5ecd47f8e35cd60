#pragma once

#include <cstdint>
#include <optional>

#include "rayvr/accel.hpp"
#include "rayvr/camera.hpp"
#include "rayvr/gbuffer.hpp"
#include "rayvr/hit.hpp"
#include "rayvr/image.hpp"
#include "rayvr/scene.hpp"

namespace rayvr {

struct TraceSettings {
    /// Mirror recursion limit: reflection rays traced per primary ray.
    int max_depth = 1;
    /// Indirect bounces per path-traced sample.
    int path_max_depth = 4;
    int spp = 1;
    std::uint64_t seed = 0;
    RayGenMode raygen_mode = RayGenMode::InverseMatrix;

    /// Throws std::invalid_argument on max_depth < 1, path_max_depth < 0 or spp < 1.
    void validate() const;
};

struct RayCounters {
    std::uint64_t primary = 0;
    std::uint64_t shadow = 0;
    std::uint64_t reflection = 0;
    std::uint64_t indirect = 0;

    std::uint64_t total() const { return primary + shadow + reflection + indirect; }
    RayCounters& operator+=(const RayCounters& o);
};

/// Counter-based random numbers: every value is a pure function of
/// (seed, eye, pixel, frame, sample, bounce, dimension), so results do not
/// depend on scheduling.
class SampleRng {
public:
    SampleRng(std::uint64_t seed, std::uint32_t eye, std::uint32_t pixel, std::uint32_t frame, std::uint32_t sample);
    /// Uniform in [0, 1).
    double uniform(std::uint32_t bounce, std::uint32_t dim) const;

private:
    std::uint64_t key_;
};

std::uint64_t mix64(std::uint64_t x);

/// Everything a shading call needs besides the hit. Counters may be null.
struct TraceContext {
    const Scene& scene;
    const Tlas& tlas;
    const TraceSettings& settings;
    RayCounters* counters = nullptr;
};

/// 1 when nothing opaque lies between `point` and the light, else 0.
/// The shadow ray starts at `point` with t_min = scene.ray_epsilon().
double shadow_visibility(const Vec3& point, const Light& light, const Tlas& tlas, const Scene& scene,
                         RayCounters* counters = nullptr);

/// Emission plus the sum over lights of eval_material, each multiplied by
/// shadow visibility when `with_shadows`.
Rgb shade_direct(const Hit& hit, const Scene& scene, const Tlas& tlas, bool with_shadows,
                 RayCounters* counters = nullptr);

/// shade_direct(with shadows) + specular * radiance along the mirror
/// direction. Below max_depth the reflection is traced and its hit shaded
/// recursively as a mirror; at max_depth the environment is used.
Rgb shade_mirror(const Hit& hit, const TraceContext& ctx, const RayPayload& payload);

/// One path-traced sample starting at a known first hit.
Rgb path_trace_from_hit(const Hit& hit, const TraceContext& ctx, const SampleRng& rng);

/// One path-traced sample along a camera ray (miss returns the environment).
Rgb path_trace_ray(const Ray& ray, const TraceContext& ctx, const SampleRng& rng);

/// Camera ray for `pixel` at sub-pixel `offset` under a ray-casting mode.
/// GBufferDerived falls back to the inverse-matrix ray.
Ray camera_ray(PixelCoord pixel, ImageSize dims, const Eye& eye, RayGenMode mode, Vec2 offset = {0.5, 0.5});

/// Mean of settings.spp samples with stratified sub-pixel jitter.
Rgb path_trace_pixel(PixelCoord pixel, ImageSize dims, const Eye& eye, const TraceContext& ctx, std::uint32_t eye_index,
                     std::uint32_t frame);

/// Resolves the first hit (G-buffer or camera ray per mode and material) and
/// dispatches on the hit material's effect. Throws std::invalid_argument in
/// GBufferDerived mode without a G-buffer.
Rgb trace_pixel_dispatch(PixelCoord pixel, ImageSize dims, const Eye& eye, const GBuffer* gbuffer,
                         const TraceContext& ctx, std::uint32_t eye_index, std::uint32_t frame);

/// Progressive running mean.
class Accumulator {
public:
    /// Folds `current` in. With `reset` (or a size change) history restarts at `current`.
    const HdrImage& accumulate(const HdrImage& current, bool reset);
    void reset() { frame_index_ = 0; }
    int frame_index() const { return frame_index_; }
    const HdrImage& image() const { return history_; }

private:
    HdrImage history_;
    int frame_index_ = 0;
};

/// history + (current - history) / frame_index; frame_index == 1 or
/// camera_moved returns `current`. Throws std::invalid_argument on size mismatch.
HdrImage accumulate(const HdrImage& history, const HdrImage& current, int frame_index, bool camera_moved);

/// Reinhard c / (1 + c), then sRGB encoding, rounded to 8 bits.
std::uint8_t tonemap_channel(double c);
Rgb8 tonemap(const Rgb& c);
LdrImage tonemap(const HdrImage& hdr);

}  // namespace rayvr
