#include "rayvr/gbuffer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "rayvr/accel.hpp"
#include "rayvr/parallel.hpp"
#include "rayvr/tracer.hpp"

namespace rayvr {

GBuffer::GBuffer(ImageSize s)
    : size(s),
      coverage(s.pixel_count(), 0),
      position(s.pixel_count()),
      normal(s.pixel_count()),
      material_id(s.pixel_count(), 0),
      depth(s.pixel_count(), 1.0),
      instance(s.pixel_count(), 0),
      triangle(s.pixel_count(), 0),
      u(s.pixel_count(), 0.0),
      v(s.pixel_count(), 0.0) {}

std::optional<Vec3> GBuffer::position_at(int x, int y) const {
    if (!covered(x, y)) return std::nullopt;
    return position[index(x, y)];
}

std::size_t GBuffer::covered_count() const {
    return static_cast<std::size_t>(std::count(coverage.begin(), coverage.end(), std::uint8_t{1}));
}

namespace {

struct ClipVertex {
    double x, y, z, w;
    Vec3 bary;  // weights of the source triangle's vertices
};

// Screen-space triangle after clipping, ready for scan conversion.
struct ScreenTri {
    std::array<double, 3> sx, sy, z, inv_w;
    std::array<Vec3, 3> bary;
    std::uint32_t instance;
    std::uint32_t triangle;
    int y_lo, y_hi;  // inclusive pixel row range
};

// Keeps the part of `poly` where dist(v) >= 0.
void clip_polygon(std::vector<ClipVertex>& poly, std::vector<ClipVertex>& scratch, double (*dist)(const ClipVertex&)) {
    scratch.clear();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const ClipVertex& a = poly[i];
        const ClipVertex& b = poly[(i + 1) % n];
        const double da = dist(a);
        const double db = dist(b);
        if (da >= 0.0) scratch.push_back(a);
        if ((da >= 0.0) != (db >= 0.0)) {
            const double t = da / (da - db);
            scratch.push_back({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t,
                               a.w + (b.w - a.w) * t, a.bary + (b.bary - a.bary) * t});
        }
    }
    poly.swap(scratch);
}

double near_distance(const ClipVertex& v) { return v.z; }
double far_distance(const ClipVertex& v) { return v.w - v.z; }

// Top-left rule in y-down screen space for an edge whose inward gradient is (a, b).
inline bool owns_edge(double a, double b) { return a > 0.0 || (a == 0.0 && b > 0.0); }

std::vector<ScreenTri> setup_triangles(const Scene& scene, const Eye& eye, ImageSize dims) {
    std::vector<ScreenTri> out;
    std::vector<ClipVertex> poly;
    std::vector<ClipVertex> scratch;
    const double w = dims.width;
    const double h = dims.height;
    for (std::uint32_t ii = 0; ii < scene.instances.size(); ++ii) {
        const Instance& inst = scene.instances[ii];
        if (!scene.material_at(inst.material_index).opaque()) continue;
        const Mat4 to_clip = eye.view_proj * inst.transform;
        const Mesh& mesh = scene.meshes[inst.mesh];
        for (std::uint32_t ti = 0; ti < mesh.triangles.size(); ++ti) {
            const auto& tri = mesh.triangles[ti];
            poly.clear();
            for (int k = 0; k < 3; ++k) {
                const auto c = to_clip.transform4({mesh.positions[tri[k]].x, mesh.positions[tri[k]].y,
                                                   mesh.positions[tri[k]].z, 1.0});
                Vec3 bary{};
                bary[k] = 1.0;
                poly.push_back({c[0], c[1], c[2], c[3], bary});
            }
            const bool inside = std::all_of(poly.begin(), poly.end(), [](const ClipVertex& v) {
                return near_distance(v) >= 0.0 && far_distance(v) >= 0.0;
            });
            if (!inside) {
                clip_polygon(poly, scratch, near_distance);
                if (poly.size() < 3) continue;
                clip_polygon(poly, scratch, far_distance);
                if (poly.size() < 3) continue;
            }
            // Project to continuous raster coordinates (pixel centers at +0.5).
            std::vector<std::array<double, 4>> sv(poly.size());
            for (std::size_t k = 0; k < poly.size(); ++k) {
                const double iw = 1.0 / poly[k].w;
                sv[k] = {(poly[k].x * iw + 1.0) * 0.5 * w, (poly[k].y * iw + 1.0) * 0.5 * h, poly[k].z * iw, iw};
            }
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
                ScreenTri st;
                const std::size_t idx[3] = {0, k, k + 1};
                for (int j = 0; j < 3; ++j) {
                    st.sx[j] = sv[idx[j]][0];
                    st.sy[j] = sv[idx[j]][1];
                    st.z[j] = sv[idx[j]][2];
                    st.inv_w[j] = sv[idx[j]][3];
                    st.bary[j] = poly[idx[j]].bary;
                }
                const double area = (st.sx[1] - st.sx[0]) * (st.sy[2] - st.sy[0]) -
                                    (st.sy[1] - st.sy[0]) * (st.sx[2] - st.sx[0]);
                if (!(area != 0.0) || !std::isfinite(area)) continue;
                if (area < 0.0) {
                    std::swap(st.sx[1], st.sx[2]);
                    std::swap(st.sy[1], st.sy[2]);
                    std::swap(st.z[1], st.z[2]);
                    std::swap(st.inv_w[1], st.inv_w[2]);
                    std::swap(st.bary[1], st.bary[2]);
                }
                const double ymin = std::min({st.sy[0], st.sy[1], st.sy[2]});
                const double ymax = std::max({st.sy[0], st.sy[1], st.sy[2]});
                // Rows whose center y + 0.5 can fall inside.
                st.y_lo = static_cast<int>(std::max(0.0, std::ceil(ymin - 0.5)));
                st.y_hi = static_cast<int>(std::min(h - 1.0, std::floor(ymax - 0.5)));
                if (st.y_lo > st.y_hi) continue;
                st.instance = ii;
                st.triangle = ti;
                out.push_back(st);
            }
        }
    }
    return out;
}

void raster_rows(const std::vector<ScreenTri>& tris, int row_lo, int row_hi, GBuffer& gb) {
    const int width = gb.size.width;
    for (const ScreenTri& st : tris) {
        const int y0 = std::max(st.y_lo, row_lo);
        const int y1 = std::min(st.y_hi, row_hi - 1);
        if (y0 > y1) continue;
        const double xmin = std::min({st.sx[0], st.sx[1], st.sx[2]});
        const double xmax = std::max({st.sx[0], st.sx[1], st.sx[2]});
        const int x0 = static_cast<int>(std::max(0.0, std::ceil(xmin - 0.5)));
        const int x1 = static_cast<int>(std::min(width - 1.0, std::floor(xmax - 0.5)));
        if (x0 > x1) continue;

        // Edge k is opposite vertex k, positive inside. Endpoints are taken in
        // a canonical order so a shared edge evaluates to exact negatives in
        // both triangles and the fill rule gives it to exactly one of them.
        struct Edge {
            double ax, ay, bx, by, sign;
            bool own;
        };
        std::array<Edge, 3> edges;
        for (int k = 0; k < 3; ++k) {
            int i = (k + 1) % 3;
            int j = (k + 2) % 3;
            const double gx = -(st.sy[j] - st.sy[i]);
            const double gy = st.sx[j] - st.sx[i];
            double sign = 1.0;
            if (st.sx[j] < st.sx[i] || (st.sx[j] == st.sx[i] && st.sy[j] < st.sy[i])) {
                std::swap(i, j);
                sign = -1.0;
            }
            edges[k] = {st.sx[i], st.sy[i], st.sx[j], st.sy[j], sign, owns_edge(gx, gy)};
        }
        auto eval = [](const Edge& e, double px, double py) {
            return e.sign * ((e.bx - e.ax) * (py - e.ay) - (e.by - e.ay) * (px - e.ax));
        };
        const double area = eval(edges[0], st.sx[0], st.sy[0]);
        if (!(area > 0.0)) continue;
        const double inv_area = 1.0 / area;

        for (int y = y0; y <= y1; ++y) {
            const double py = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5;
                std::array<double, 3> e;
                bool inside = true;
                for (int k = 0; k < 3 && inside; ++k) {
                    e[k] = eval(edges[k], px, py);
                    inside = e[k] > 0.0 || (e[k] == 0.0 && edges[k].own);
                }
                if (!inside) continue;
                const double l0 = e[0] * inv_area;
                const double l1 = e[1] * inv_area;
                const double l2 = e[2] * inv_area;
                // Clipped vertices can land a rounding error outside [0, 1].
                const double z = std::clamp(l0 * st.z[0] + l1 * st.z[1] + l2 * st.z[2], 0.0, 1.0);
                const std::size_t idx = static_cast<std::size_t>(y) * width + x;
                if (gb.coverage[idx] && !(z < gb.depth[idx])) continue;
                // Perspective-correct source barycentrics.
                const double q0 = l0 * st.inv_w[0];
                const double q1 = l1 * st.inv_w[1];
                const double q2 = l2 * st.inv_w[2];
                const double qs = q0 + q1 + q2;
                const Vec3 b = (st.bary[0] * q0 + st.bary[1] * q1 + st.bary[2] * q2) / qs;
                gb.coverage[idx] = 1;
                gb.depth[idx] = z;
                gb.instance[idx] = st.instance;
                gb.triangle[idx] = st.triangle;
                gb.u[idx] = b.y;
                gb.v[idx] = b.z;
            }
        }
    }
}

}  // namespace

GBuffer rasterize_gbuffer(const Scene& scene, const Eye& eye, ImageSize dims, WorkerPool* pool) {
    if (dims.width <= 0 || dims.height <= 0) throw std::invalid_argument("rasterize_gbuffer: empty image");
    GBuffer gb(dims);
    const std::vector<ScreenTri> tris = setup_triangles(scene, eye, dims);

    // Bands of rows; every band walks triangles in the same global order, so
    // depth ties resolve identically for any worker count.
    const int bands = (dims.height + kTileSize - 1) / kTileSize;
    auto band = [&](int b) {
        const int lo = b * kTileSize;
        const int hi = std::min(lo + kTileSize, dims.height);
        raster_rows(tris, lo, hi, gb);
        for (int y = lo; y < hi; ++y) {
            for (int x = 0; x < dims.width; ++x) {
                const std::size_t idx = gb.index(x, y);
                if (!gb.coverage[idx]) continue;
                const Instance& inst = scene.instances[gb.instance[idx]];
                const Mesh& mesh = scene.meshes[inst.mesh];
                const auto& tri = mesh.triangles[gb.triangle[idx]];
                const double w0 = 1.0 - gb.u[idx] - gb.v[idx];
                const Vec3 p = inst.transform.transform_point(mesh.positions[tri[0]] * w0 +
                                                              mesh.positions[tri[1]] * gb.u[idx] +
                                                              mesh.positions[tri[2]] * gb.v[idx]);
                const Hit hit = resolve_hit(scene, gb.instance[idx], gb.triangle[idx], gb.u[idx], gb.v[idx],
                                            length(p - eye.origin), p - eye.origin);
                gb.position[idx] = hit.position;
                gb.normal[idx] = hit.normal;
                gb.material_id[idx] = hit.material_id;
            }
        }
    };
    if (pool) {
        pool->run(bands, band);
    } else {
        for (int b = 0; b < bands; ++b) band(b);
    }
    return gb;
}

Hit gbuffer_hit(const GBuffer& gb, int x, int y, const Scene& scene, const Eye& eye) {
    const std::size_t idx = gb.index(x, y);
    const Vec3 d = gb.position[idx] - eye.origin;
    return resolve_hit(scene, gb.instance[idx], gb.triangle[idx], gb.u[idx], gb.v[idx], length(d), d);
}

HdrImage shade_gbuffer_direct(const GBuffer& gb, const Scene& scene, bool shadows, const Tlas& tlas, const Eye& eye,
                              WorkerPool* pool) {
    HdrImage out(gb.size);
    auto tile = [&](int index) {
        const Tile t = tile_at(gb.size, index);
        for (int y = t.y0; y < t.y1; ++y) {
            for (int x = t.x0; x < t.x1; ++x) {
                if (gb.covered(x, y)) {
                    out.at(x, y) = shade_direct(gbuffer_hit(gb, x, y, scene, eye), scene, tlas, shadows);
                } else {
                    out.at(x, y) = scene.environment.lookup(gen_ray_inverse_matrix({x, y}, gb.size, eye).direction);
                }
            }
        }
    };
    const int tiles = tile_count(gb.size);
    if (pool) {
        pool->run(tiles, tile);
    } else {
        for (int i = 0; i < tiles; ++i) tile(i);
    }
    return out;
}

namespace {

Rgb8 to_byte(const Vec3& c) {
    auto b = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    return {b(c.x), b(c.y), b(c.z)};
}

Vec3 id_color(int id) {
    const std::uint64_t h = mix64(static_cast<std::uint64_t>(id) + 0x51ed27u);
    return {0.25 + 0.75 * ((h & 0xff) / 255.0), 0.25 + 0.75 * (((h >> 8) & 0xff) / 255.0),
            0.25 + 0.75 * (((h >> 16) & 0xff) / 255.0)};
}

}  // namespace

LdrImage gbuffer_channel_image(const GBuffer& gb, std::string_view channel, const Scene& scene) {
    LdrImage img(gb.size);
    const Aabb box = scene.bounds();
    const Vec3 extent = box.empty() ? Vec3{1, 1, 1} : max(box.extent(), Vec3{1e-12, 1e-12, 1e-12});
    // z' bunches up near 1 for distant far planes; stretch the covered range.
    double zlo = 1.0, zhi = 0.0;
    for (std::size_t i = 0; i < gb.coverage.size(); ++i) {
        if (!gb.coverage[i]) continue;
        zlo = std::min(zlo, gb.depth[i]);
        zhi = std::max(zhi, gb.depth[i]);
    }
    for (int y = 0; y < gb.size.height; ++y) {
        for (int x = 0; x < gb.size.width; ++x) {
            const std::size_t i = gb.index(x, y);
            Vec3 c{};
            if (channel == "coverage") {
                c = gb.coverage[i] ? Vec3{1, 1, 1} : Vec3{};
            } else if (!gb.coverage[i]) {
                c = {};
            } else if (channel == "position") {
                const Vec3 p = gb.position[i] - box.lo;
                c = {p.x / extent.x, p.y / extent.y, p.z / extent.z};
            } else if (channel == "normal") {
                c = gb.normal[i] * 0.5 + Vec3{0.5, 0.5, 0.5};
            } else if (channel == "material") {
                c = id_color(gb.material_id[i]);
            } else if (channel == "depth") {
                const double d = zhi > zlo ? 1.0 - (gb.depth[i] - zlo) / (zhi - zlo) : 1.0;
                c = {d, d, d};
            } else {
                throw std::invalid_argument("unknown G-buffer channel '" + std::string(channel) + "'");
            }
            img.at(x, y) = to_byte(c);
        }
    }
    return img;
}

}  // namespace rayvr
