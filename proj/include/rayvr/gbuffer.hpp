#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "rayvr/camera.hpp"
#include "rayvr/hit.hpp"
#include "rayvr/image.hpp"
#include "rayvr/scene.hpp"

namespace rayvr {

class Tlas;
class WorkerPool;

/// Per-eye rasterized surface attributes. Uncovered pixels hold no data.
struct GBuffer {
    ImageSize size{};
    std::vector<std::uint8_t> coverage;
    std::vector<Vec3> position;
    std::vector<Vec3> normal;
    std::vector<int> material_id;
    std::vector<double> depth;  // z' in [0, 1]
    std::vector<std::uint32_t> instance;
    std::vector<std::uint32_t> triangle;
    std::vector<double> u;
    std::vector<double> v;

    GBuffer() = default;
    explicit GBuffer(ImageSize s);

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * size.width + x; }
    bool covered(int x, int y) const { return coverage[index(x, y)] != 0; }
    std::optional<Vec3> position_at(int x, int y) const;
    std::size_t covered_count() const;
};

/// Rasterizes every opaque instance: homogeneous near/far clipping, top-left
/// fill rule at pixel centers, perspective-correct barycentrics and a
/// less-than depth test (earlier triangles win ties).
GBuffer rasterize_gbuffer(const Scene& scene, const Eye& eye, ImageSize dims, WorkerPool* pool = nullptr);

/// Surface hit for a covered pixel, resolved exactly as a ray hit from the eye would be.
Hit gbuffer_hit(const GBuffer& gbuffer, int x, int y, const Scene& scene, const Eye& eye);

/// Direct lighting (plus emission) of every covered pixel; uncovered pixels
/// take the environment along the pixel's ray.
HdrImage shade_gbuffer_direct(const GBuffer& gbuffer, const Scene& scene, bool shadows, const Tlas& tlas,
                              const Eye& eye, WorkerPool* pool = nullptr);

/// Channel names: position, normal, material, depth, coverage.
LdrImage gbuffer_channel_image(const GBuffer& gbuffer, std::string_view channel, const Scene& scene);

}  // namespace rayvr
