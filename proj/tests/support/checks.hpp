#pragma once
// Measurement routines shared by the unit tests and the acceptance runner.
// Each returns raw numbers; thresholds live with the callers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rayvr/accel.hpp"
#include "rayvr/bench.hpp"
#include "rayvr/gbuffer.hpp"
#include "rayvr/graph.hpp"
#include "rayvr/parallel.hpp"
#include "rayvr/tracer.hpp"

namespace checks {

using namespace rayvr;

// --- transform chain -------------------------------------------------------

struct TransformChain {
    double max_error = 0.0;
    int cases = 0;
};

inline TransformChain transform_chain() {
    TransformChain r;
    auto expect = [&](double got, double want) {
        r.max_error = std::max(r.max_error, std::abs(got - want));
        ++r.cases;
    };
    ProjectionParams p;
    p.near = 1.0;
    p.far = 2.0;
    p.fov_y = radians(90.0);
    const Mat4 m = make_perspective(p);
    // raster-aligned points on the axis
    expect(m.transform_point({0, 0, 1.0}).z, 0.0);
    expect(m.transform_point({0, 0, 2.0}).z, 1.0);
    expect(m.transform_point({0, 0, 1.5}).z, 2.0 * (1.5 - 1.0) / (1.5 * 1.0));
    ProjectionParams d;  // default n = 0.1, f = 1000
    const Mat4 md = make_perspective(d);
    expect(md.transform_point({0, 0, d.near}).z, 0.0);
    expect(md.transform_point({0, 0, d.far}).z, 1.0);
    expect(fov_scale(radians(90.0)), 1.0);
    expect(fov_scale(radians(60.0)), std::sqrt(3.0));
    const ImageSize dims{800, 800};
    expect(raster_to_ndc({0, 0}, dims).x, -0.99875);
    expect(raster_to_ndc({799, 799}, dims).x, 0.99875);
    expect(raster_to_ndc({799, 0}, dims).y, -0.99875);
    expect(raster_to_ndc({(800 - 1) / 2.0, (800 - 1) / 2.0}, dims).x, 0.0);
    expect(raster_to_ndc({(800 - 1) / 2.0, (800 - 1) / 2.0}, dims).y, 0.0);
    return r;
}

// --- ray generation --------------------------------------------------------

inline double raygen_max_angle(int pairs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < pairs; ++i) {
        ProjectionParams p;
        p.fov_y = radians(10.0 + 150.0 * u(rng));
        const ImageSize dims{16 + static_cast<int>(u(rng) * 1024), 16 + static_cast<int>(u(rng) * 1024)};
        p.aspect = dims.aspect();
        Vec3 forward = oracle::random_unit(rng);
        if (std::abs(forward.y) > 0.99) forward = {1, 0, 0};
        const Pose pose{oracle::random_in_box(rng, {{-10, -10, -10}, {10, 10, 10}}), forward, {0, 1, 0}};
        const Eye eye = make_eye(pose, p);
        const PixelCoord px{static_cast<int>(u(rng) * dims.width), static_cast<int>(u(rng) * dims.height)};
        const Ray a = gen_ray_optimized(px, dims, eye, p);
        const Ray b = gen_ray_inverse_matrix(px, dims, eye);
        worst = std::max(worst, oracle::angle_between(a.direction, b.direction));
    }
    return worst;
}

// HMD-like stereo: each eye's frustum is wider toward the temple.
inline EyeFrusta hmd_frusta() {
    const FrustumTangents left{-1.39, 1.0, -1.11, 1.11};
    const FrustumTangents right{-1.0, 1.39, -1.11, 1.11};
    return {left, right};
}

struct Divergence {
    double optimized_px = 0.0;  // worst reprojection error of the optimized expression
    double inverse_px = 0.0;    // same for the inverse-matrix route (should be ~0)
};

// Points along each generated ray are projected back through the eye's real
// frustum; the distance to the pixel center is the registration error.
inline Divergence asymmetric_divergence(ImageSize dims = {512, 512}) {
    ProjectionParams p;
    p.fov_y = radians(96.0);
    p.aspect = dims.aspect();
    const StereoRig rig = make_stereo_rig(Pose{{0, 1.6, 0}, {0, 0, -1}, {0, 1, 0}}, 0.064, p, hmd_frusta());
    Divergence d;
    for (const Eye* eye : {&rig.left, &rig.right}) {
        for (int y = 0; y < dims.height; y += 17) {
            for (int x = 0; x < dims.width; x += 17) {
                const Vec2 center{x + 0.5, y + 0.5};
                for (int mode = 0; mode < 2; ++mode) {
                    const Ray r = mode == 0 ? gen_ray_optimized({x, y}, dims, *eye, p)
                                            : gen_ray_inverse_matrix({x, y}, dims, *eye);
                    const auto hit = oracle::project(*eye, r.origin + r.direction * 5.0, dims);
                    const double err = hit ? std::hypot(hit->x - center.x, hit->y - center.y) : 1e9;
                    (mode == 0 ? d.optimized_px : d.inverse_px) =
                        std::max(mode == 0 ? d.optimized_px : d.inverse_px, err);
                }
            }
        }
    }
    return d;
}

// --- G-buffer vs ray casting ----------------------------------------------

struct GBufferMatch {
    long long checked = 0;
    long long within = 0;
    double worst = 0.0;
    double fraction() const { return checked ? static_cast<double>(within) / checked : 0.0; }
};

inline GBufferMatch gbuffer_vs_rays(const Scene& scene, const Tlas& tlas, const Eye& eye, ImageSize dims,
                                    double tolerance, WorkerPool* pool = nullptr) {
    const GBuffer gb = rasterize_gbuffer(scene, eye, dims, pool);
    GBufferMatch m;
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            if (!gb.covered(x, y) || fixture::silhouette(gb, x, y)) continue;
            ++m.checked;
            const Ray ray = gen_ray_inverse_matrix({x, y}, dims, eye);
            const auto hit = intersect_closest(ray, tlas, scene);
            if (!hit) continue;
            const double e = length(hit->position - gb.position[gb.index(x, y)]);
            m.worst = std::max(m.worst, e);
            if (e <= tolerance) ++m.within;
        }
    }
    return m;
}

// --- BVH vs exhaustive scan -------------------------------------------------

struct BvhMatch {
    int rays = 0;
    int closest_mismatch = 0;  // hit/miss or identity disagreement
    int any_mismatch = 0;
    int hits = 0;
    double max_dt = 0.0;
};

inline BvhMatch bvh_vs_scan(const Scene& scene, const Tlas& tlas, int rays, std::uint64_t seed) {
    const auto tris = oracle::world_triangles(scene);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Aabb box = scene.bounds();
    const Vec3 pad = box.extent() * 0.1;
    box.lo -= pad;
    box.hi += pad;
    BvhMatch m;
    for (int i = 0; i < rays; ++i) {
        Ray ray;
        ray.origin = oracle::random_in_box(rng, box);
        ray.direction = oracle::random_unit(rng);
        ray.t_min = 0.0;
        ray.t_max = std::numeric_limits<double>::infinity();
        const auto want = oracle::scan_closest(tris, ray.origin, ray.direction, ray.t_min, ray.t_max);
        const auto got = tlas.closest(ray, scene);
        ++m.rays;
        if (want.has_value() != got.has_value()) {
            ++m.closest_mismatch;
        } else if (want) {
            ++m.hits;
            if (want->instance != got->instance || want->triangle != got->triangle) ++m.closest_mismatch;
            m.max_dt = std::max(m.max_dt, std::abs(want->t - got->t));
        }
        // segment queries with a random far bound
        Ray seg = ray;
        seg.t_max = u(rng) * scene.scale();
        if (oracle::scan_any(tris, seg.origin, seg.direction, seg.t_min, seg.t_max) != tlas.any(seg, scene)) {
            ++m.any_mismatch;
        }
    }
    return m;
}

// --- Monte Carlo checks -----------------------------------------------------

struct Furnace {
    Rgb covered_mean;  // mean over pixels that see the sphere
    Rgb image_mean;
    long long covered = 0;
};

inline Furnace furnace(const Rgb& env, ImageSize dims, int spp, WorkerPool& pool) {
    const Scene scene = fixture::furnace(env);
    const Tlas tlas = build_accel(scene);
    TraceSettings s;
    s.spp = spp;
    s.seed = 7;
    const Eye eye = scene_eye(scene, dims);
    const HdrImage img = trace_image(scene, tlas, eye, dims, nullptr, s, 0, 0, pool);
    const GBuffer gb = rasterize_gbuffer(scene, eye, dims);
    Furnace f;
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            f.image_mean += img.at(x, y);
            if (gb.covered(x, y)) {
                f.covered_mean += img.at(x, y);
                ++f.covered;
            }
        }
    }
    f.image_mean = f.image_mean / static_cast<double>(dims.pixel_count());
    if (f.covered) f.covered_mean = f.covered_mean / static_cast<double>(f.covered);
    return f;
}

struct DirectLight {
    int points = 0;
    double total_relative = 0.0;  // summed over the grid
    double worst_relative = 0.0;
    double worst_absolute = 0.0;
};

// Path tracer with no indirect bounces versus the exhaustive light sum.
inline DirectLight direct_light(int samples) {
    const Scene scene = fixture::two_light_floor();
    const Tlas tlas = build_accel(scene);
    TraceSettings s;
    s.path_max_depth = 0;
    const TraceContext ctx{scene, tlas, s, nullptr};
    DirectLight r;
    double got_total = 0.0, want_total = 0.0;
    for (int gz = 0; gz < 5; ++gz) {
        for (int gx = 0; gx < 5; ++gx) {
            Ray down;
            down.origin = {-2.4 + 1.2 * gx, 5.0, -2.4 + 1.2 * gz};
            down.direction = {0, -1, 0};
            auto hit = intersect_closest(down, tlas, scene);
            if (!hit || hit->material_id != 1) continue;  // blocked by the box
            const Rgb want = shade_direct(*hit, scene, tlas, true);
            Rgb sum;
            for (int k = 0; k < samples; ++k) {
                sum += path_trace_from_hit(*hit, ctx, SampleRng(3, 0, r.points, 0, k));
            }
            const Rgb got = sum / samples;
            got_total += got.luminance();
            want_total += want.luminance();
            const double diff = std::abs(got.luminance() - want.luminance());
            r.worst_absolute = std::max(r.worst_absolute, diff);
            if (want.luminance() > 1e-6) r.worst_relative = std::max(r.worst_relative, diff / want.luminance());
            ++r.points;
        }
    }
    r.total_relative = std::abs(got_total - want_total) / want_total;
    return r;
}

struct AccumulationResult {
    bool fixed_point = false;
    double alternating_error = 0.0;
    double slope = 0.0;
    std::vector<std::pair<int, double>> mse;  // (frames, MSE between independent runs)
};

inline AccumulationResult accumulation(int frames, ImageSize dims) {
    AccumulationResult r;
    // fixed point and closed-form running mean on synthetic frames
    const HdrImage c(4, 3, Rgb(0.37, 1.9, 123.25));
    HdrImage h;
    r.fixed_point = true;
    for (int k = 1; k <= frames; ++k) {
        h = accumulate(h, c, k, false);
        if (!(h == c)) r.fixed_point = false;
    }
    const HdrImage a(4, 3, Rgb(0.1, 2.0, 7.0));
    const HdrImage b(4, 3, Rgb(0.9, 0.5, 3.0));
    h = HdrImage{};
    for (int k = 1; k <= 200; ++k) h = accumulate(h, k % 2 ? a : b, k, false);
    for (const Rgb& p : h.pixels) {
        r.alternating_error = std::max({r.alternating_error, std::abs(p.r - 0.5), std::abs(p.g - 1.25),
                                        std::abs(p.b - 5.0)});
    }

    // Two independent accumulations: E|A_N - B_N|^2 = 2 Var / N.
    Scene scene = load_scene(fixture::scene_path("cornell"));
    override_all_effects(scene, EffectId::PathTraced);
    const Tlas tlas = build_accel(scene);
    const Eye eye = scene_eye(scene, dims);
    Renderer ra(0), rb(0);
    TraceSettings sa, sb;
    sa.seed = 11;
    sb.seed = 12;
    std::vector<double> lx, ly;
    for (int n = 1; n <= frames; ++n) {
        const FrameOutput fa = ra.render_frame(scene, tlas, eye, dims, sa);
        const FrameOutput fb = rb.render_frame(scene, tlas, eye, dims, sb);
        if ((n & (n - 1)) != 0) continue;
        double mse = 0.0;
        for (std::size_t i = 0; i < fa.hdr[0].pixels.size(); ++i) {
            const Rgb d = fa.hdr[0].pixels[i] - fb.hdr[0].pixels[i];
            mse += d.r * d.r + d.g * d.g + d.b * d.b;
        }
        mse /= fa.hdr[0].pixels.size();
        r.mse.emplace_back(n, mse);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(mse));
    }
    r.slope = oracle::slope(lx, ly);
    return r;
}

// --- determinism -------------------------------------------------------------

inline bool deterministic_across_workers(const std::string& scene_name, int workers_a, int workers_b,
                                         ImageSize dims, bool all_path) {
    Scene scene = load_scene(fixture::scene_path(scene_name));
    if (all_path) override_all_effects(scene, EffectId::PathTraced);
    const Tlas tlas = build_accel(scene);
    const StereoRig rig = scene_rig(scene, dims);
    TraceSettings s;
    s.seed = 2024;
    s.spp = 2;
    Renderer a(workers_a), b(workers_b);
    for (int f = 0; f < 2; ++f) {
        const FrameOutput fa = a.render_frame(scene, tlas, rig, dims, s);
        const FrameOutput fb = b.render_frame(scene, tlas, rig, dims, s);
        if (fa.hdr != fb.hdr) return false;
    }
    return true;
}

// --- performance ------------------------------------------------------------

struct PerfScene {
    std::string scene;
    double effect_ms[4] = {};  // mono, InverseMatrix, all-<effect>
    double mirror_stereo_ms = 0.0;
    double mirror_gbuffer_ms = 0.0;
    int frames = 0;
};

inline PerfScene performance(const std::string& name, ImageSize dims, int frames) {
    const Scene scene = load_scene(fixture::scene_path(name));
    const Tlas tlas = build_accel(scene);
    BenchOptions o;
    o.size = dims;
    o.frames = frames;
    o.warmup = 1;
    o.workers = 0;
    Renderer renderer(0);
    PerfScene r;
    r.scene = name;
    r.frames = frames;
    for (EffectId fx : kAllEffects) {
        r.effect_ms[static_cast<int>(fx)] =
            measure(scene, tlas, {"III", "", false, RayGenMode::InverseMatrix, fx}, o, renderer).mean_ms;
    }
    r.mirror_stereo_ms =
        measure(scene, tlas, {"I", "", true, RayGenMode::InverseMatrix, EffectId::Mirror}, o, renderer).mean_ms;
    r.mirror_gbuffer_ms =
        measure(scene, tlas, {"I", "", false, RayGenMode::GBufferDerived, EffectId::Mirror}, o, renderer).mean_ms;
    return r;
}

}  // namespace checks
