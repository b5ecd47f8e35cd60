#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rayvr/camera.hpp"
#include "rayvr/hit.hpp"
#include "rayvr/math.hpp"
#include "rayvr/scene.hpp"

namespace rayvr {

/// Binary BVH node. Interior nodes have count == 0 and their children at
/// `first` and `first + 1`; leaves cover primitives [first, first + count).
struct BvhNode {
    Aabb bounds;
    std::uint32_t first = 0;
    std::uint32_t count = 0;

    bool is_leaf() const { return count > 0; }
};

struct BvhBuildOptions {
    int max_leaf_size = 4;
    int bins = 16;
};

/// BVH over boxes, built with binned SAH and a median-split fallback.
struct Bvh {
    std::vector<BvhNode> nodes;
    /// Leaf slot -> original primitive index.
    std::vector<std::uint32_t> order;

    static Bvh build(std::span<const Aabb> boxes, BvhBuildOptions options = {});
    const BvhNode& root() const { return nodes.front(); }
};

struct TraversalStats {
    std::uint64_t nodes_visited = 0;
    std::uint64_t triangle_tests = 0;
};

/// Raw intersection before surface attributes are resolved.
struct HitRecord {
    double t = 0.0;
    std::uint32_t instance = 0;
    std::uint32_t triangle = 0;
    double u = 0.0;
    double v = 0.0;
};

/// Bottom-level structure over one mesh's triangles in object space.
class Blas {
public:
    /// Throws std::invalid_argument for a mesh without triangles.
    static Blas build(const Mesh& mesh, BvhBuildOptions options = {});

    const Bvh& bvh() const { return bvh_; }
    Aabb bounds() const { return bvh_.root().bounds; }
    std::size_t triangle_count() const { return tris_.size(); }
    /// Original triangle index stored in leaf slot `slot`.
    std::uint32_t triangle_at(std::size_t slot) const { return bvh_.order[slot]; }

    // `inv_dir` must be 1 / dir componentwise. Updates `best` when a closer hit is found.
    bool intersect(const Vec3& org, const Vec3& dir, const Vec3& inv_dir, double t_min, HitRecord& best,
                   TraversalStats* stats) const;
    bool occluded(const Vec3& org, const Vec3& dir, const Vec3& inv_dir, double t_min, double t_max,
                  TraversalStats* stats) const;

private:
    struct Triangle {
        Vec3 p0, p1, p2;
    };
    Bvh bvh_;
    std::vector<Triangle> tris_;  // leaf-slot order
};

/// Top-level structure over instance world-space bounds.
class Tlas {
public:
    struct InstanceRecord {
        std::uint32_t instance = 0;
        std::uint32_t blas = 0;
        Mat4 world_to_object = Mat4::identity();
        Aabb world_bounds;
    };

    static Tlas build(const Scene& scene, std::shared_ptr<const std::vector<Blas>> blas,
                      BvhBuildOptions options = {});

    const Bvh& bvh() const { return bvh_; }
    const std::vector<InstanceRecord>& records() const { return records_; }
    const std::vector<Blas>& blas() const { return *blas_; }
    std::shared_ptr<const std::vector<Blas>> blas_set() const { return blas_; }
    bool empty() const { return records_.empty(); }

    std::optional<HitRecord> closest(const Ray& ray, const Scene& scene, TraversalStats* stats = nullptr) const;
    bool any(const Ray& ray, const Scene& scene, TraversalStats* stats = nullptr) const;

private:
    Bvh bvh_;
    std::vector<InstanceRecord> records_;  // leaf-slot order
    std::shared_ptr<const std::vector<Blas>> blas_;
};

Blas build_blas(const Mesh& mesh);
/// Builds one Blas per scene mesh.
std::shared_ptr<const std::vector<Blas>> build_all_blas(const Scene& scene);
Tlas build_tlas(const Scene& scene, std::shared_ptr<const std::vector<Blas>> blas);
/// Convenience: every Blas plus the Tlas.
Tlas build_accel(const Scene& scene);

/// Closest opaque intersection in [t_min, t_max]; transparent materials are skipped.
std::optional<Hit> intersect_closest(const Ray& ray, const Tlas& tlas, const Scene& scene,
                                     TraversalStats* stats = nullptr);
/// True iff an opaque intersection exists in [t_min, t_max]; stops at the first one.
bool intersect_any(const Ray& ray, const Tlas& tlas, const Scene& scene, TraversalStats* stats = nullptr);

}  // namespace rayvr
