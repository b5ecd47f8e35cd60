#pragma once
// Reference implementations the library is checked against. Deliberately
// naive: world-space triangle soup, linear scans, closed-form projection.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rayvr/camera.hpp"
#include "rayvr/scene.hpp"

namespace oracle {

using rayvr::Vec2;
using rayvr::Vec3;

struct WorldTriangle {
    Vec3 p0, p1, p2;
    std::uint32_t instance;
    std::uint32_t triangle;
    bool opaque;
};

inline std::vector<WorldTriangle> world_triangles(const rayvr::Scene& scene) {
    std::vector<WorldTriangle> out;
    for (std::uint32_t i = 0; i < scene.instances.size(); ++i) {
        const auto& inst = scene.instances[i];
        const auto& mesh = scene.meshes[inst.mesh];
        const bool opaque = scene.find_material(inst.material_id)->alpha >= 0.5;
        for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
            const auto& tri = mesh.triangles[t];
            out.push_back({inst.transform.transform_point(mesh.positions[tri[0]]),
                           inst.transform.transform_point(mesh.positions[tri[1]]),
                           inst.transform.transform_point(mesh.positions[tri[2]]), i, t, opaque});
        }
    }
    return out;
}

// Classic two-sided Moller-Trumbore.
inline std::optional<double> moller_trumbore(const Vec3& o, const Vec3& d, const WorldTriangle& tri, double t_min,
                                             double t_max, double* u_out = nullptr, double* v_out = nullptr) {
    const Vec3 e1 = tri.p1 - tri.p0;
    const Vec3 e2 = tri.p2 - tri.p0;
    const Vec3 p = cross(d, e2);
    const double det = dot(e1, p);
    if (det == 0.0) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 s = o - tri.p0;
    const double u = dot(s, p) * inv;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3 q = cross(s, e1);
    const double v = dot(d, q) * inv;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = dot(e2, q) * inv;
    if (t < t_min || t > t_max) return std::nullopt;
    if (u_out) *u_out = u;
    if (v_out) *v_out = v;
    return t;
}

struct ScanHit {
    double t;
    std::uint32_t instance;
    std::uint32_t triangle;
    double u, v;
};

inline std::optional<ScanHit> scan_closest(const std::vector<WorldTriangle>& tris, const Vec3& o, const Vec3& d,
                                           double t_min, double t_max) {
    std::optional<ScanHit> best;
    for (const auto& tri : tris) {
        if (!tri.opaque) continue;
        double u = 0, v = 0;
        if (auto t = moller_trumbore(o, d, tri, t_min, best ? best->t : t_max, &u, &v)) {
            best = ScanHit{*t, tri.instance, tri.triangle, u, v};
        }
    }
    return best;
}

inline bool scan_any(const std::vector<WorldTriangle>& tris, const Vec3& o, const Vec3& d, double t_min,
                     double t_max) {
    for (const auto& tri : tris) {
        if (tri.opaque && moller_trumbore(o, d, tri, t_min, t_max)) return true;
    }
    return false;
}

// Continuous raster position of a world point, from the eye basis and the
// frustum tangents alone (no matrices).
inline std::optional<Vec2> project(const rayvr::Eye& eye, const Vec3& world, rayvr::ImageSize dims) {
    const Vec3 c = world - eye.origin;
    const double x = dot(c, eye.u);
    const double y = -dot(c, eye.v);  // rows grow downward
    const double z = -dot(c, eye.w);  // forward depth
    if (!(z > 0.0)) return std::nullopt;
    const auto& f = eye.frustum;
    const double nx = (2.0 * x / z - (f.left + f.right)) / (f.right - f.left);
    const double ny = (2.0 * y / z - (f.top + f.bottom)) / (f.bottom - f.top);
    return Vec2{(nx + 1.0) * 0.5 * dims.width, (ny + 1.0) * 0.5 * dims.height};
}

// Direction through continuous raster position (rx, ry) of the eye's true frustum.
inline Vec3 direction_through(const rayvr::Eye& eye, double rx, double ry, rayvr::ImageSize dims) {
    const auto& f = eye.frustum;
    const double tx = f.left + (f.right - f.left) * rx / dims.width;
    const double ty = f.top + (f.bottom - f.top) * ry / dims.height;
    return normalize(tx * eye.u - ty * eye.v - eye.w);
}

inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(length(cross(a, b)), dot(a, b));
}

inline Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    for (;;) {
        const Vec3 v{n(rng), n(rng), n(rng)};
        const double l = length(v);
        if (l > 1e-9) return v / l;
    }
}

inline Vec3 random_in_box(std::mt19937_64& rng, const rayvr::Aabb& box) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vec3 e = box.extent();
    return {box.lo.x + u(rng) * e.x, box.lo.y + u(rng) * e.y, box.lo.z + u(rng) * e.z};
}

// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace oracle
