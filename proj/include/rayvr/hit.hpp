#pragma once

#include <cstdint>

#include "rayvr/math.hpp"

namespace rayvr {

/// A resolved surface intersection. Both normals are flipped to face `wo`,
/// so shading is two-sided.
struct Hit {
    double t = 0.0;
    std::uint32_t instance = 0;
    std::uint32_t triangle = 0;
    // position = (1 - u - v) * p0 + u * p1 + v * p2
    double u = 0.0;
    double v = 0.0;
    Vec3 position{};
    Vec3 normal{0, 0, 1};
    Vec3 geometric_normal{0, 0, 1};
    /// Unit vector from the surface toward the ray origin.
    Vec3 wo{0, 0, 1};
    int material_id = 0;
    std::uint32_t material_index = 0;
};

}  // namespace rayvr
