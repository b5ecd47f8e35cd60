#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "rayvr/scene.hpp"

// Procedural meshes for bundled scenes and tests. All are closed or
// single-sided with counter-clockwise winding seen from outside.

namespace rayvr::shapes {

inline Mesh quad(std::string name, const Vec3& corner, const Vec3& edge_u, const Vec3& edge_v) {
    Mesh m;
    m.name = std::move(name);
    m.positions = {corner, corner + edge_u, corner + edge_u + edge_v, corner + edge_v};
    const Vec3 n = normalize(cross(edge_u, edge_v));
    m.normals.assign(4, n);
    m.uvs = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

/// Axis-aligned box with flat-shaded faces (24 vertices).
inline Mesh box(std::string name, const Vec3& lo, const Vec3& hi) {
    Mesh m;
    m.name = std::move(name);
    auto face = [&](const Vec3& c, const Vec3& eu, const Vec3& ev) {
        const auto base = static_cast<std::uint32_t>(m.positions.size());
        const Vec3 n = normalize(cross(eu, ev));
        for (const Vec3& p : {c, c + eu, c + eu + ev, c + ev}) {
            m.positions.push_back(p);
            m.normals.push_back(n);
        }
        m.uvs.insert(m.uvs.end(), {{0, 0}, {1, 0}, {1, 1}, {0, 1}});
        m.triangles.push_back({base, base + 1, base + 2});
        m.triangles.push_back({base, base + 2, base + 3});
    };
    const Vec3 d = hi - lo;
    face({lo.x, lo.y, hi.z}, {d.x, 0, 0}, {0, d.y, 0});   // +z
    face({hi.x, lo.y, lo.z}, {-d.x, 0, 0}, {0, d.y, 0});  // -z
    face({hi.x, lo.y, hi.z}, {0, 0, -d.z}, {0, d.y, 0});  // +x
    face({lo.x, lo.y, lo.z}, {0, 0, d.z}, {0, d.y, 0});   // -x
    face({lo.x, hi.y, hi.z}, {d.x, 0, 0}, {0, 0, -d.z});  // +y
    face({lo.x, lo.y, lo.z}, {d.x, 0, 0}, {0, 0, d.z});   // -y
    return m;
}

/// UV sphere; triangle count = 2 * slices * (stacks - 1).
inline Mesh uv_sphere(std::string name, const Vec3& center, double radius, int slices, int stacks) {
    Mesh m;
    m.name = std::move(name);
    const double pi = std::numbers::pi;
    for (int j = 0; j <= stacks; ++j) {
        const double theta = pi * j / stacks;
        for (int i = 0; i <= slices; ++i) {
            const double phi = 2.0 * pi * i / slices;
            const Vec3 n{std::sin(theta) * std::cos(phi), std::cos(theta), -std::sin(theta) * std::sin(phi)};
            m.positions.push_back(center + radius * n);
            m.normals.push_back(n);
            m.uvs.push_back({static_cast<double>(i) / slices, static_cast<double>(j) / stacks});
        }
    }
    const auto row = static_cast<std::uint32_t>(slices + 1);
    for (int j = 0; j < stacks; ++j) {
        for (int i = 0; i < slices; ++i) {
            const std::uint32_t a = j * row + i, b = a + 1, c = a + row, d = c + 1;
            if (j != 0) m.triangles.push_back({a, c, b});
            if (j != stacks - 1) m.triangles.push_back({b, c, d});
        }
    }
    return m;
}

/// Capped cylinder along +y from `base`.
inline Mesh cylinder(std::string name, const Vec3& base, double radius, double height, int slices) {
    Mesh m;
    m.name = std::move(name);
    const double pi = std::numbers::pi;
    for (int i = 0; i <= slices; ++i) {
        const double phi = 2.0 * pi * i / slices;
        const Vec3 n{std::cos(phi), 0, -std::sin(phi)};
        m.positions.push_back(base + radius * n);
        m.positions.push_back(base + radius * n + Vec3{0, height, 0});
        m.normals.push_back(n);
        m.normals.push_back(n);
        m.uvs.push_back({static_cast<double>(i) / slices, 0});
        m.uvs.push_back({static_cast<double>(i) / slices, 1});
    }
    for (int i = 0; i < slices; ++i) {
        const std::uint32_t a = 2 * i, b = a + 1, c = a + 2, d = a + 3;
        m.triangles.push_back({a, c, d});
        m.triangles.push_back({a, d, b});
    }
    for (int cap = 0; cap < 2; ++cap) {
        const double y = cap ? height : 0.0;
        const Vec3 n{0, cap ? 1.0 : -1.0, 0};
        const auto center = static_cast<std::uint32_t>(m.positions.size());
        m.positions.push_back(base + Vec3{0, y, 0});
        m.normals.push_back(n);
        m.uvs.push_back({0.5, 0.5});
        for (int i = 0; i <= slices; ++i) {
            const double phi = 2.0 * pi * i / slices;
            m.positions.push_back(base + Vec3{radius * std::cos(phi), y, -radius * std::sin(phi)});
            m.normals.push_back(n);
            m.uvs.push_back({0.5 + 0.5 * std::cos(phi), 0.5 + 0.5 * std::sin(phi)});
        }
        for (int i = 0; i < slices; ++i) {
            const std::uint32_t a = center + 1 + i, b = a + 1;
            if (cap) m.triangles.push_back({center, a, b});
            else m.triangles.push_back({center, b, a});
        }
    }
    return m;
}

/// Torus in the xz plane; triangle count = 2 * major * minor.
inline Mesh torus(std::string name, const Vec3& center, double major_radius, double minor_radius, int major_segments,
                  int minor_segments) {
    Mesh m;
    m.name = std::move(name);
    const double pi = std::numbers::pi;
    for (int i = 0; i <= major_segments; ++i) {
        const double a = 2.0 * pi * i / major_segments;
        const Vec3 ring{std::cos(a), 0, -std::sin(a)};
        for (int j = 0; j <= minor_segments; ++j) {
            const double b = 2.0 * pi * j / minor_segments;
            const Vec3 n = std::cos(b) * ring + Vec3{0, std::sin(b), 0};
            m.positions.push_back(center + major_radius * ring + minor_radius * n);
            m.normals.push_back(n);
            m.uvs.push_back({static_cast<double>(i) / major_segments, static_cast<double>(j) / minor_segments});
        }
    }
    const auto row = static_cast<std::uint32_t>(minor_segments + 1);
    for (int i = 0; i < major_segments; ++i) {
        for (int j = 0; j < minor_segments; ++j) {
            const std::uint32_t a = i * row + j, b = a + 1, c = a + row, d = c + 1;
            m.triangles.push_back({a, c, d});
            m.triangles.push_back({a, d, b});
        }
    }
    return m;
}

/// Appends `src` into `dst` (positions, normals, uvs, re-indexed triangles).
inline void append(Mesh& dst, const Mesh& src) {
    const auto base = static_cast<std::uint32_t>(dst.positions.size());
    dst.positions.insert(dst.positions.end(), src.positions.begin(), src.positions.end());
    dst.normals.insert(dst.normals.end(), src.normals.begin(), src.normals.end());
    dst.uvs.insert(dst.uvs.end(), src.uvs.begin(), src.uvs.end());
    for (auto t : src.triangles) dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

}  // namespace rayvr::shapes
