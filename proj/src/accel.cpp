#include "rayvr/accel.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <stdexcept>

namespace rayvr {

namespace {

// Slab exits are scaled up slightly so traversal stays conservative under rounding.
constexpr double kRobustFarScale = 1.0 + 4.0 * DBL_EPSILON;
constexpr double kTraversalCost = 1.0;
constexpr int kStackSize = 128;

struct BuildItem {
    std::uint32_t node;
    std::uint32_t begin;
    std::uint32_t end;
};

struct Bin {
    Aabb bounds;
    std::uint32_t count = 0;
};

}  // namespace

Bvh Bvh::build(std::span<const Aabb> boxes, BvhBuildOptions options) {
    if (boxes.empty()) throw std::invalid_argument("bvh: no primitives");
    const int max_leaf = std::max(1, options.max_leaf_size);
    const int bin_count = std::max(2, options.bins);

    Bvh bvh;
    bvh.order.resize(boxes.size());
    std::vector<Vec3> centroids(boxes.size());
    for (std::uint32_t i = 0; i < boxes.size(); ++i) {
        bvh.order[i] = i;
        centroids[i] = boxes[i].center();
    }
    bvh.nodes.reserve(2 * boxes.size());
    bvh.nodes.emplace_back();

    std::vector<BuildItem> work{{0, 0, static_cast<std::uint32_t>(boxes.size())}};
    std::vector<Bin> bins(bin_count);
    while (!work.empty()) {
        const BuildItem item = work.back();
        work.pop_back();
        const std::uint32_t count = item.end - item.begin;

        Aabb bounds;
        Aabb centroid_bounds;
        for (std::uint32_t i = item.begin; i < item.end; ++i) {
            bounds.expand(boxes[bvh.order[i]]);
            centroid_bounds.expand(centroids[bvh.order[i]]);
        }
        bvh.nodes[item.node].bounds = bounds;

        if (count <= static_cast<std::uint32_t>(max_leaf)) {
            bvh.nodes[item.node].first = item.begin;
            bvh.nodes[item.node].count = count;
            continue;
        }

        // Binned SAH over every axis with a non-degenerate centroid extent.
        int best_axis = -1;
        int best_split = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        const Vec3 cextent = centroid_bounds.extent();
        for (int axis = 0; axis < 3; ++axis) {
            if (!(cextent[axis] > 0.0)) continue;
            std::fill(bins.begin(), bins.end(), Bin{});
            const double scale = bin_count / cextent[axis];
            for (std::uint32_t i = item.begin; i < item.end; ++i) {
                const std::uint32_t prim = bvh.order[i];
                int b = static_cast<int>((centroids[prim][axis] - centroid_bounds.lo[axis]) * scale);
                b = std::clamp(b, 0, bin_count - 1);
                bins[b].count++;
                bins[b].bounds.expand(boxes[prim]);
            }
            std::vector<double> right_area(bin_count, 0.0);
            std::vector<std::uint32_t> right_count(bin_count, 0);
            Aabb acc;
            std::uint32_t n = 0;
            for (int b = bin_count - 1; b > 0; --b) {
                acc.expand(bins[b].bounds);
                n += bins[b].count;
                right_area[b] = acc.half_area();
                right_count[b] = n;
            }
            acc = Aabb{};
            n = 0;
            for (int split = 1; split < bin_count; ++split) {
                acc.expand(bins[split - 1].bounds);
                n += bins[split - 1].count;
                if (n == 0 || right_count[split] == 0) continue;
                const double cost = acc.half_area() * n + right_area[split] * right_count[split];
                if (cost < best_cost) {
                    best_cost = cost;
                    best_axis = axis;
                    best_split = split;
                }
            }
        }

        std::uint32_t mid = item.begin;
        if (best_axis >= 0) {
            const double parent_area = bounds.half_area();
            const double sah = kTraversalCost + (parent_area > 0.0 ? best_cost / parent_area : best_cost);
            (void)sah;  // leaves are capped at max_leaf, so a split is always taken here
            const double scale = bin_count / cextent[best_axis];
            const double lo = centroid_bounds.lo[best_axis];
            auto it = std::partition(bvh.order.begin() + item.begin, bvh.order.begin() + item.end,
                                     [&](std::uint32_t prim) {
                                         int b = static_cast<int>((centroids[prim][best_axis] - lo) * scale);
                                         return std::clamp(b, 0, bin_count - 1) < best_split;
                                     });
            mid = static_cast<std::uint32_t>(it - bvh.order.begin());
        }
        if (mid == item.begin || mid == item.end) {
            // Median fallback (coincident centroids or a degenerate binning).
            const int axis = centroid_bounds.largest_axis();
            mid = item.begin + count / 2;
            std::nth_element(bvh.order.begin() + item.begin, bvh.order.begin() + mid, bvh.order.begin() + item.end,
                             [&](std::uint32_t a, std::uint32_t b) {
                                 if (centroids[a][axis] != centroids[b][axis]) return centroids[a][axis] < centroids[b][axis];
                                 return a < b;
                             });
        }

        const auto left = static_cast<std::uint32_t>(bvh.nodes.size());
        bvh.nodes.emplace_back();
        bvh.nodes.emplace_back();
        bvh.nodes[item.node].first = left;
        bvh.nodes[item.node].count = 0;
        work.push_back({left + 1, mid, item.end});
        work.push_back({left, item.begin, mid});
    }
    return bvh;
}

namespace {

// Entry distance of a ray into a box, or +inf on a miss.
inline double slab_entry(const Aabb& box, const Vec3& org, const Vec3& inv_dir, double t_min, double t_max) {
    double t0 = t_min;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        double near = (box.lo[a] - org[a]) * inv_dir[a];
        double far = (box.hi[a] - org[a]) * inv_dir[a];
        if (near > far) std::swap(near, far);
        // fmax/fmin drop NaNs from 0 * inf, which keeps the test conservative.
        t0 = std::fmax(t0, near);
        t1 = std::fmin(t1, far * kRobustFarScale);
    }
    return t0 <= t1 ? t0 : std::numeric_limits<double>::infinity();
}

// Watertight ray/triangle test (Woop, Benthin, Wald 2013) in double precision,
// with long-double re-evaluation of edge functions that land exactly on zero.
struct WatertightRay {
    int kx, ky, kz;
    double sx, sy, sz;
    Vec3 org;

    WatertightRay(const Vec3& o, const Vec3& d) : org(o) {
        const Vec3 ad{std::abs(d.x), std::abs(d.y), std::abs(d.z)};
        kz = ad.x >= ad.y ? (ad.x >= ad.z ? 0 : 2) : (ad.y >= ad.z ? 1 : 2);
        kx = (kz + 1) % 3;
        ky = (kx + 1) % 3;
        if (d[kz] < 0.0) std::swap(kx, ky);
        sx = d[kx] / d[kz];
        sy = d[ky] / d[kz];
        sz = 1.0 / d[kz];
    }

    // On a hit in [t_min, t_max], writes t and barycentrics of p1 (u) and p2 (v).
    bool intersect(const Vec3& p0, const Vec3& p1, const Vec3& p2, double t_min, double t_max, double& t, double& u,
                   double& v) const {
        const Vec3 a = p0 - org;
        const Vec3 b = p1 - org;
        const Vec3 c = p2 - org;
        const double ax = a[kx] - sx * a[kz];
        const double ay = a[ky] - sy * a[kz];
        const double bx = b[kx] - sx * b[kz];
        const double by = b[ky] - sy * b[kz];
        const double cx = c[kx] - sx * c[kz];
        const double cy = c[ky] - sy * c[kz];
        double e0 = cx * by - cy * bx;
        double e1 = ax * cy - ay * cx;
        double e2 = bx * ay - by * ax;
        if (e0 == 0.0 || e1 == 0.0 || e2 == 0.0) {
            using ld = long double;
            e0 = static_cast<double>(ld(cx) * ld(by) - ld(cy) * ld(bx));
            e1 = static_cast<double>(ld(ax) * ld(cy) - ld(ay) * ld(cx));
            e2 = static_cast<double>(ld(bx) * ld(ay) - ld(by) * ld(ax));
        }
        if ((e0 < 0.0 || e1 < 0.0 || e2 < 0.0) && (e0 > 0.0 || e1 > 0.0 || e2 > 0.0)) return false;
        const double det = e0 + e1 + e2;
        if (det == 0.0) return false;
        const double az = sz * a[kz];
        const double bz = sz * b[kz];
        const double cz = sz * c[kz];
        const double tt = (e0 * az + e1 * bz + e2 * cz) / det;
        if (!(tt >= t_min && tt <= t_max)) return false;
        t = tt;
        u = e1 / det;
        v = e2 / det;
        return true;
    }
};

inline Vec3 safe_inverse(const Vec3& d) {
    auto inv = [](double x) { return x != 0.0 ? 1.0 / x : std::copysign(std::numeric_limits<double>::infinity(), x); };
    return {inv(d.x), inv(d.y), inv(d.z)};
}

}  // namespace

Blas Blas::build(const Mesh& mesh, BvhBuildOptions options) {
    if (mesh.triangles.empty()) throw std::invalid_argument("blas: mesh '" + mesh.name + "' has no triangles");
    std::vector<Aabb> boxes(mesh.triangles.size());
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        for (auto idx : mesh.triangles[i]) boxes[i].expand(mesh.positions[idx]);
    }
    Blas blas;
    blas.bvh_ = Bvh::build(boxes, options);
    blas.tris_.resize(mesh.triangles.size());
    for (std::size_t slot = 0; slot < blas.bvh_.order.size(); ++slot) {
        const auto& tri = mesh.triangles[blas.bvh_.order[slot]];
        blas.tris_[slot] = {mesh.positions[tri[0]], mesh.positions[tri[1]], mesh.positions[tri[2]]};
    }
    return blas;
}

bool Blas::intersect(const Vec3& org, const Vec3& dir, const Vec3& inv_dir, double t_min, HitRecord& best,
                     TraversalStats* stats) const {
    const WatertightRay wray(org, dir);
    std::array<std::uint32_t, kStackSize> stack;
    int top = 0;
    stack[top++] = 0;
    bool found = false;
    while (top > 0) {
        const BvhNode& node = bvh_.nodes[stack[--top]];
        if (stats) stats->nodes_visited++;
        if (slab_entry(node.bounds, org, inv_dir, t_min, best.t) == std::numeric_limits<double>::infinity()) continue;
        if (node.is_leaf()) {
            for (std::uint32_t slot = node.first; slot < node.first + node.count; ++slot) {
                if (stats) stats->triangle_tests++;
                const Triangle& tri = tris_[slot];
                double t, u, v;
                if (wray.intersect(tri.p0, tri.p1, tri.p2, t_min, best.t, t, u, v) && t < best.t) {
                    best.t = t;
                    best.u = u;
                    best.v = v;
                    best.triangle = bvh_.order[slot];
                    found = true;
                }
            }
            continue;
        }
        const BvhNode& l = bvh_.nodes[node.first];
        const BvhNode& r = bvh_.nodes[node.first + 1];
        const double tl = slab_entry(l.bounds, org, inv_dir, t_min, best.t);
        const double tr = slab_entry(r.bounds, org, inv_dir, t_min, best.t);
        const bool hit_l = tl != std::numeric_limits<double>::infinity();
        const bool hit_r = tr != std::numeric_limits<double>::infinity();
        // Children are re-tested when popped; counting them here would double-count visits.
        if (hit_l && hit_r) {
            if (tl <= tr) {
                stack[top++] = node.first + 1;
                stack[top++] = node.first;
            } else {
                stack[top++] = node.first;
                stack[top++] = node.first + 1;
            }
        } else if (hit_l) {
            stack[top++] = node.first;
        } else if (hit_r) {
            stack[top++] = node.first + 1;
        }
    }
    return found;
}

bool Blas::occluded(const Vec3& org, const Vec3& dir, const Vec3& inv_dir, double t_min, double t_max,
                    TraversalStats* stats) const {
    const WatertightRay wray(org, dir);
    std::array<std::uint32_t, kStackSize> stack;
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const BvhNode& node = bvh_.nodes[stack[--top]];
        if (stats) stats->nodes_visited++;
        if (slab_entry(node.bounds, org, inv_dir, t_min, t_max) == std::numeric_limits<double>::infinity()) continue;
        if (node.is_leaf()) {
            for (std::uint32_t slot = node.first; slot < node.first + node.count; ++slot) {
                if (stats) stats->triangle_tests++;
                const Triangle& tri = tris_[slot];
                double t, u, v;
                if (wray.intersect(tri.p0, tri.p1, tri.p2, t_min, t_max, t, u, v)) return true;
            }
            continue;
        }
        stack[top++] = node.first + 1;
        stack[top++] = node.first;
    }
    return false;
}

Tlas Tlas::build(const Scene& scene, std::shared_ptr<const std::vector<Blas>> blas, BvhBuildOptions options) {
    if (!blas || blas->size() < scene.meshes.size()) throw std::invalid_argument("tlas: missing bottom-level structures");
    Tlas tlas;
    tlas.blas_ = std::move(blas);
    if (scene.instances.empty()) return tlas;

    std::vector<InstanceRecord> records(scene.instances.size());
    std::vector<Aabb> boxes(scene.instances.size());
    for (std::uint32_t i = 0; i < scene.instances.size(); ++i) {
        const Instance& inst = scene.instances[i];
        records[i].instance = i;
        records[i].blas = inst.mesh;
        records[i].world_to_object = inst.inverse_transform;
        records[i].world_bounds = transform_bounds(inst.transform, (*tlas.blas_)[inst.mesh].bounds());
        boxes[i] = records[i].world_bounds;
    }
    tlas.bvh_ = Bvh::build(boxes, options);
    tlas.records_.resize(records.size());
    for (std::size_t slot = 0; slot < records.size(); ++slot) tlas.records_[slot] = records[tlas.bvh_.order[slot]];
    return tlas;
}

std::optional<HitRecord> Tlas::closest(const Ray& ray, const Scene& scene, TraversalStats* stats) const {
    if (records_.empty()) return std::nullopt;
    const Vec3 inv_dir = safe_inverse(ray.direction);
    HitRecord best;
    best.t = ray.t_max;
    bool found = false;

    std::array<std::uint32_t, kStackSize> stack;
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const BvhNode& node = bvh_.nodes[stack[--top]];
        if (stats) stats->nodes_visited++;
        if (slab_entry(node.bounds, ray.origin, inv_dir, ray.t_min, best.t) == std::numeric_limits<double>::infinity()) {
            continue;
        }
        if (!node.is_leaf()) {
            stack[top++] = node.first + 1;
            stack[top++] = node.first;
            continue;
        }
        for (std::uint32_t slot = node.first; slot < node.first + node.count; ++slot) {
            const InstanceRecord& rec = records_[slot];
            if (!scene.material_at(scene.instances[rec.instance].material_index).opaque()) continue;
            const Vec3 org = rec.world_to_object.transform_point(ray.origin);
            const Vec3 dir = rec.world_to_object.transform_vector(ray.direction);
            if ((*blas_)[rec.blas].intersect(org, dir, safe_inverse(dir), ray.t_min, best, stats)) {
                best.instance = rec.instance;
                found = true;
            }
        }
    }
    if (!found) return std::nullopt;
    return best;
}

bool Tlas::any(const Ray& ray, const Scene& scene, TraversalStats* stats) const {
    if (records_.empty()) return false;
    const Vec3 inv_dir = safe_inverse(ray.direction);
    std::array<std::uint32_t, kStackSize> stack;
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const BvhNode& node = bvh_.nodes[stack[--top]];
        if (stats) stats->nodes_visited++;
        if (slab_entry(node.bounds, ray.origin, inv_dir, ray.t_min, ray.t_max) == std::numeric_limits<double>::infinity()) {
            continue;
        }
        if (!node.is_leaf()) {
            stack[top++] = node.first + 1;
            stack[top++] = node.first;
            continue;
        }
        for (std::uint32_t slot = node.first; slot < node.first + node.count; ++slot) {
            const InstanceRecord& rec = records_[slot];
            if (!scene.material_at(scene.instances[rec.instance].material_index).opaque()) continue;
            const Vec3 org = rec.world_to_object.transform_point(ray.origin);
            const Vec3 dir = rec.world_to_object.transform_vector(ray.direction);
            if ((*blas_)[rec.blas].occluded(org, dir, safe_inverse(dir), ray.t_min, ray.t_max, stats)) return true;
        }
    }
    return false;
}

Blas build_blas(const Mesh& mesh) { return Blas::build(mesh); }

std::shared_ptr<const std::vector<Blas>> build_all_blas(const Scene& scene) {
    auto set = std::make_shared<std::vector<Blas>>();
    set->reserve(scene.meshes.size());
    for (const Mesh& mesh : scene.meshes) set->push_back(Blas::build(mesh));
    return set;
}

Tlas build_tlas(const Scene& scene, std::shared_ptr<const std::vector<Blas>> blas) {
    return Tlas::build(scene, std::move(blas));
}

Tlas build_accel(const Scene& scene) { return build_tlas(scene, build_all_blas(scene)); }

std::optional<Hit> intersect_closest(const Ray& ray, const Tlas& tlas, const Scene& scene, TraversalStats* stats) {
    const auto rec = tlas.closest(ray, scene, stats);
    if (!rec) return std::nullopt;
    return resolve_hit(scene, rec->instance, rec->triangle, rec->u, rec->v, rec->t, ray.direction);
}

bool intersect_any(const Ray& ray, const Tlas& tlas, const Scene& scene, TraversalStats* stats) {
    return tlas.any(ray, scene, stats);
}

}  // namespace rayvr
