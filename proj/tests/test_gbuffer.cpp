#include "doctest.h"
#include "support/checks.hpp"

using namespace rayvr;

namespace {

Eye axis_eye(double fov_deg = 60.0, double aspect = 1.0) {
    ProjectionParams p;
    p.fov_y = radians(fov_deg);
    p.aspect = aspect;
    return make_eye({{0, 0, 0}, {0, 0, -1}, {0, 1, 0}}, p);
}

Mesh single(const Vec3& a, const Vec3& b, const Vec3& c) {
    Mesh m;
    m.name = "tri";
    m.positions = {a, b, c};
    m.normals.assign(3, normalize(cross(b - a, c - a)));
    m.triangles = {{0, 1, 2}};
    return m;
}

Scene one_mesh(const Mesh& mesh) {
    return fixture::Builder{}.add(fixture::material(1, Rgb(0.5))).add(mesh, 1).build();
}

}  // namespace

TEST_SUITE("gbuffer") {

TEST_CASE("full-screen quad covers every pixel at the right depth") {
    const Scene s = one_mesh(shapes::quad("q", {-10, -10, -5}, {20, 0, 0}, {0, 20, 0}));
    const Eye eye = axis_eye();
    const GBuffer gb = rasterize_gbuffer(s, eye, {64, 48});
    CHECK(gb.covered_count() == 64u * 48u);
    for (std::size_t i = 0; i < gb.position.size(); ++i) {
        CHECK(gb.position[i].z == doctest::Approx(-5.0).epsilon(1e-9));
        CHECK(gb.material_id[i] == 1);
        CHECK(gb.depth[i] >= 0.0);
        CHECK(gb.depth[i] <= 1.0);
    }
}

TEST_CASE("empty scene has no coverage") {
    Scene s;
    s.finalize();
    const GBuffer gb = rasterize_gbuffer(s, axis_eye(), {32, 32});
    CHECK(gb.covered_count() == 0);
    CHECK_FALSE(gb.position_at(3, 3));
}

TEST_CASE("shared edges are owned by exactly one triangle") {
    // diagonal passes exactly through pixel centers of a 16x16 image
    const Eye eye = axis_eye(90.0);
    const Vec3 a{-2, -2, -2}, b{2, -2, -2}, c{2, 2, -2}, d{-2, 2, -2};
    const ImageSize dims{16, 16};
    for (int flip = 0; flip < 2; ++flip) {
        const Mesh t1 = flip ? single(a, b, c) : single(c, b, a);
        const Mesh t2 = flip ? single(a, c, d) : single(d, c, a);
        const GBuffer g1 = rasterize_gbuffer(one_mesh(t1), eye, dims);
        const GBuffer g2 = rasterize_gbuffer(one_mesh(t2), eye, dims);
        for (int y = 0; y < dims.height; ++y) {
            for (int x = 0; x < dims.width; ++x) {
                CHECK(g1.covered(x, y) + g2.covered(x, y) == 1);
            }
        }
    }
}

TEST_CASE("nearer of two overlapping triangles wins") {
    const Mesh near = single({-1.5, -1, -3}, {1, -1.2, -2}, {0, 1.5, -4});
    const Mesh far = single({-1, 1, -2.2}, {1.5, 0.5, -4.5}, {-0.5, -1.5, -2.5});
    const Scene s = fixture::Builder{}
                        .add(fixture::material(1, Rgb(0.5)))
                        .add(fixture::material(2, Rgb(0.2)))
                        .add(near, 1)
                        .add(far, 2)
                        .build();
    const Eye eye = axis_eye(70.0);
    const ImageSize dims{96, 96};
    const GBuffer gb = rasterize_gbuffer(s, eye, dims);
    const auto tris = oracle::world_triangles(s);
    int agreed = 0, covered = 0;
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            const Vec3 d = oracle::direction_through(eye, x + 0.5, y + 0.5, dims);
            const auto h = oracle::scan_closest(tris, eye.origin, d, 0.0, 1e30);
            if (!gb.covered(x, y) || !h || fixture::silhouette(gb, x, y)) continue;
            ++covered;
            if (gb.instance[gb.index(x, y)] == h->instance) ++agreed;
        }
    }
    CHECK(covered > 1000);
    CHECK(agreed == covered);
}

TEST_CASE("geometry crossing the near plane is clipped, not dropped") {
    const Scene s = one_mesh(single({-1, -1, 1}, {1, -1, 1}, {0, 0.5, -6}));
    const GBuffer gb = rasterize_gbuffer(s, axis_eye(), {64, 64});
    CHECK(gb.covered_count() > 0);
    for (std::size_t i = 0; i < gb.position.size(); ++i) {
        if (gb.coverage[i]) CHECK(gb.position[i].z <= -0.1 + 1e-9);
    }
}

TEST_CASE("rays through stored positions re-hit them") {
    const Scene s = one_mesh(single({-1, -0.8, -3}, {1.2, -0.5, -4}, {0.1, 1.0, -2.5}));
    const Tlas tlas = build_accel(s);
    const Eye eye = axis_eye();
    const GBuffer gb = rasterize_gbuffer(s, eye, {64, 64});
    REQUIRE(gb.covered_count() > 100);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            const auto pos = gb.position_at(x, y);
            const auto ray = gen_ray_from_gbuffer(pos, eye);
            CHECK(ray.has_value() == gb.covered(x, y));
            if (!ray) continue;
            const auto h = intersect_closest(*ray, tlas, s);
            REQUIRE(h);
            CHECK(length(h->position - *pos) <= 1e-4);
        }
    }
}

TEST_CASE("positions match ray casting on bundled scenes, both eyes") {
    for (const char* name : fixture::kBundled) {
        const Scene s = load_scene(fixture::scene_path(name));
        const Tlas tlas = build_accel(s);
        const ImageSize dims{128, 128};
        const StereoRig rig = scene_rig(s, dims);
        for (const Eye* eye : {&rig.left, &rig.right}) {
            const auto m = checks::gbuffer_vs_rays(s, tlas, *eye, dims, 1e-3);
            CHECK(m.checked > 1000);
            CHECK(m.fraction() >= 0.99);
        }
    }
}

TEST_CASE("parallel rasterization is bit-identical") {
    const Scene s = load_scene(fixture::scene_path("kitchen"));
    const Eye eye = scene_eye(s, {160, 120});
    WorkerPool pool(4);
    const GBuffer a = rasterize_gbuffer(s, eye, {160, 120});
    const GBuffer b = rasterize_gbuffer(s, eye, {160, 120}, &pool);
    CHECK(a.coverage == b.coverage);
    CHECK(a.depth == b.depth);
    CHECK(a.triangle == b.triangle);
    CHECK(a.u == b.u);
}

TEST_CASE("unshadowed shading is the plain light sum") {
    const Scene s = load_scene(fixture::scene_path("cornell"));
    const Tlas tlas = build_accel(s);
    const ImageSize dims{64, 64};
    const Eye eye = scene_eye(s, dims);
    const GBuffer gb = rasterize_gbuffer(s, eye, dims);
    const HdrImage img = shade_gbuffer_direct(gb, s, false, tlas, eye);
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            if (!gb.covered(x, y)) continue;
            const Hit h = gbuffer_hit(gb, x, y, s, eye);
            Rgb want = s.material_at(h.material_index).emissive;
            for (const Light& l : s.lights) want += eval_material(h, l, s);
            const Rgb got = img.at(x, y);
            CHECK(std::abs(got.r - want.r) <= 1e-12);
            CHECK(std::abs(got.g - want.g) <= 1e-12);
            CHECK(std::abs(got.b - want.b) <= 1e-12);
        }
    }
}

TEST_CASE("fully occluded pixels keep only emission") {
    Material floor = fixture::material(1, Rgb(0.8));
    floor.emissive = Rgb(0.05, 0.02, 0.01);
    const Scene s = fixture::Builder{}
                        .add(floor)
                        .add(fixture::material(2, Rgb(0.3)))
                        .add(shapes::quad("floor", {-3, 0, 3}, {6, 0, 0}, {0, 0, -6}), 1)
                        .add(shapes::box("roof", {-20, 2, -20}, {20, 2.2, 20}), 2)
                        .light(Light::point({0, 3, 0}, Rgb(5.0)))
                        .camera({0, 1.5, 2}, {0, 0, -1})
                        .build();
    const Tlas tlas = build_accel(s);
    const ImageSize dims{48, 48};
    const Eye eye = scene_eye(s, dims);
    const GBuffer gb = rasterize_gbuffer(s, eye, dims);
    const HdrImage lit = shade_gbuffer_direct(gb, s, true, tlas, eye);
    int floor_pixels = 0;
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            if (!gb.covered(x, y) || gb.material_id[gb.index(x, y)] != 1) continue;
            ++floor_pixels;
            CHECK(lit.at(x, y) == floor.emissive);
        }
    }
    CHECK(floor_pixels > 100);
}

TEST_CASE("shadowed G-buffer shading equals the RasterShadows effect") {
    Scene s = load_scene(fixture::scene_path("cornell"));
    override_all_effects(s, EffectId::RasterShadows);
    const Tlas tlas = build_accel(s);
    const ImageSize dims{64, 64};
    const Eye eye = scene_eye(s, dims);
    const GBuffer gb = rasterize_gbuffer(s, eye, dims);
    WorkerPool pool(1);
    const HdrImage a = shade_gbuffer_direct(gb, s, true, tlas, eye);
    TraceSettings settings;
    const HdrImage b = trace_image(s, tlas, eye, dims, &gb, settings, 0, 0, pool);
    CHECK(a == b);
}

TEST_CASE("channel dumps") {
    const Scene s = load_scene(fixture::scene_path("cornell"));
    const ImageSize dims{40, 30};
    const GBuffer gb = rasterize_gbuffer(s, scene_eye(s, dims), dims);
    for (const char* ch : {"position", "normal", "material", "depth", "coverage"}) {
        const LdrImage img = gbuffer_channel_image(gb, ch, s);
        CHECK(img.width == 40);
        CHECK(img.height == 30);
    }
    const LdrImage cov = gbuffer_channel_image(gb, "coverage", s);
    for (int y = 0; y < 30; ++y) {
        for (int x = 0; x < 40; ++x) CHECK(cov.at(x, y)[0] == (gb.covered(x, y) ? 255 : 0));
    }
    CHECK_THROWS_AS(gbuffer_channel_image(gb, "albedo", s), std::invalid_argument);
}

}
