#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "rayvr/accel.hpp"
#include "rayvr/scene_json.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace rayvr;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("rayvr_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

Scene plane_scene(Rgb albedo, Rgb specular = Rgb(0.0)) {
    return fixture::Builder{}
        .add(fixture::material(1, albedo, EffectId::Raster, specular))
        .add(shapes::quad("plane", {-5, 0, 5}, {10, 0, 0}, {0, 0, -10}), 1)
        .build();
}

Hit hit_at_origin(const Scene& scene) {
    const Tlas tlas = build_accel(scene);
    Ray r;
    r.origin = {0, 1, 0};
    r.direction = {0, -1, 0};
    auto h = intersect_closest(r, tlas, scene);
    REQUIRE(h);
    return *h;
}

}  // namespace

TEST_SUITE("scene") {

TEST_CASE("obj: single triangle") {
    const auto meshes = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    REQUIRE(meshes.size() == 1);
    REQUIRE(meshes[0].triangles.size() == 1);
    for (const Vec3& n : meshes[0].normals) CHECK(length(n - Vec3{0, 0, 1}) < 1e-12);
}

TEST_CASE("obj: quad fans into two triangles with one winding") {
    const auto meshes = parse_obj("v 0 0 0\nv 2 0 0\nv 2 1 0\nv 0 1 0\nf 1 2 3 4\n");
    REQUIRE(meshes[0].triangles.size() == 2);
    for (const auto& t : meshes[0].triangles) {
        const auto& p = meshes[0].positions;
        const Vec3 n = cross(p[t[1]] - p[t[0]], p[t[2]] - p[t[0]]);
        CHECK(n.z > 0.0);
    }
}

TEST_CASE("obj: area-weighted vertex normals on a tetrahedron") {
    const char* text =
        "v 0 0 0\nv 2 0 0\nv 0 3 0\nv 0 0 1\n"
        "f 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n";
    const auto meshes = parse_obj(text);
    const Mesh& m = meshes[0];
    REQUIRE(m.normals.size() == m.positions.size());
    // oracle: sum of unnormalized face normals (twice the area) around each vertex
    std::vector<Vec3> want(m.positions.size());
    for (const auto& t : m.triangles) {
        const Vec3 n = cross(m.positions[t[1]] - m.positions[t[0]], m.positions[t[2]] - m.positions[t[0]]);
        for (auto i : t) want[i] += n;
    }
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(std::abs(length(m.normals[i]) - 1.0) < 1e-12);
        CHECK(length(m.normals[i] - normalize(want[i])) < 1e-12);
    }
}

TEST_CASE("obj: negative indices, groups and errors") {
    const auto meshes = parse_obj("o a\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\no b\nv 0 0 1\nf 1 2 -1\n");
    REQUIRE(meshes.size() == 2);
    CHECK(meshes[0].triangles.size() == 1);
    CHECK(meshes[1].triangles.size() == 1);
    CHECK_THROWS_AS(parse_obj("v 0 0 0\nf 1 2 3\n"), ObjParseError);
    try {
        parse_obj("v 0 0 0\nv 1 0 0\nv x 1 0\n");
        FAIL("expected a parse error");
    } catch (const ObjParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("obj write/read round trip") {
    const auto dir = temp_dir("obj");
    Mesh a = shapes::box("box", {0, 0, 0}, {1, 2, 3});
    Mesh b;
    b.name = "tri";
    b.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    b.triangles = {{0, 1, 2}};
    write_obj(dir / "m.obj", {a, b});
    const auto back = load_obj(dir / "m.obj");
    REQUIRE(back.size() == 2);
    CHECK(back[0].triangles.size() == a.triangles.size());
    CHECK(back[0].positions.size() == a.positions.size());
    for (std::size_t i = 0; i < a.positions.size(); ++i) CHECK(length(back[0].positions[i] - a.positions[i]) < 1e-9);
    CHECK(back[1].triangles.size() == 1);
}

TEST_CASE("bundled cornell box loads") {
    const Scene s = load_scene(fixture::scene_path("cornell"));
    CHECK(s.lights.size() == 2);
    CHECK(s.instances.size() >= 8);
    for (const char* name : fixture::kBundled) CHECK_NOTHROW(load_scene(fixture::scene_path(name)));
    const Scene k = load_scene(fixture::scene_path("kitchen"));
    CHECK(k.triangle_count() >= 40000);
}

TEST_CASE("unknown material id is named in the error") {
    nlohmann::json doc = scene_to_json(load_scene(fixture::scene_path("arcade-like")));
    doc["instances"][0]["material"] = 4711;
    try {
        scene_from_json(doc, RAYVR_SCENE_DIR);
        FAIL("expected SceneError");
    } catch (const SceneError& e) {
        CHECK(std::string(e.what()).find("4711") != std::string::npos);
    }
}

TEST_CASE("invalid material values are rejected") {
    nlohmann::json doc = scene_to_json(load_scene(fixture::scene_path("arcade-like")));
    auto bad = doc;
    bad["materials"][0]["albedo"] = {1.5, 0, 0};
    CHECK_THROWS_AS(scene_from_json(bad, RAYVR_SCENE_DIR), SceneError);
    bad = doc;
    bad["materials"][0]["effect"] = "glass";
    CHECK_THROWS_AS(scene_from_json(bad, RAYVR_SCENE_DIR), SceneError);
    bad = doc;
    bad["materials"].push_back(bad["materials"][0]);
    CHECK_THROWS_AS(scene_from_json(bad, RAYVR_SCENE_DIR), SceneError);
    CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), SceneError);
}

TEST_CASE("constant environment") {
    const Environment env = Environment::constant(Rgb(0.5));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) CHECK(env.lookup(oracle::random_unit(rng)) == Rgb(0.5));
}

TEST_CASE("image environment is bilinear and seamless") {
    auto img = std::make_shared<HdrImage>(4, 2);
    for (int x = 0; x < 4; ++x) {
        img->at(x, 0) = Rgb(x, 0, 0);
        img->at(x, 1) = Rgb(x, 1, 0);
    }
    const Environment env = Environment::from_image(img);
    // -z maps to u = 0.5, which sits between texels 1 and 2
    const Rgb fwd = env.lookup({0, 0, -1});
    CHECK(fwd.r == doctest::Approx(1.5));
    CHECK(fwd.g == doctest::Approx(0.5));
    // straight up clamps to the top row
    CHECK(env.lookup({0, 1, 0}).g == doctest::Approx(0.0));
}

TEST_CASE("scene json round trip is idempotent") {
    for (const char* name : fixture::kBundled) {
        const Scene s = load_scene(fixture::scene_path(name));
        const nlohmann::json once = scene_to_json(s);
        const nlohmann::json twice = scene_to_json(scene_from_json(once, RAYVR_SCENE_DIR));
        CHECK(once == twice);
    }
}

TEST_CASE("set_material_effect") {
    Scene s = load_scene(fixture::scene_path("cornell"));
    const auto rev = s.revision();
    const EffectId before = s.find_material(1)->effect;
    CHECK_FALSE(set_material_effect(s, 1, before));
    CHECK(s.revision() == rev);
    CHECK(set_material_effect(s, 1, EffectId::Mirror));
    CHECK(s.revision() == rev + 1);
    CHECK(s.find_material(1)->effect == EffectId::Mirror);
    try {
        set_material_effect(s, 99, EffectId::Mirror);
        FAIL("expected SceneError");
    } catch (const SceneError& e) {
        CHECK(std::string(e.what()).find("99") != std::string::npos);
    }
    for (EffectId e : kAllEffects) CHECK(parse_effect(to_string(e)) == e);
}

TEST_CASE("effect changes leave acceleration structures valid") {
    Scene s = load_scene(fixture::scene_path("cornell"));
    const Tlas tlas = build_accel(s);
    std::mt19937_64 rng(8);
    std::vector<std::optional<HitRecord>> before;
    std::vector<Ray> rays;
    for (int i = 0; i < 200; ++i) {
        Ray r;
        r.origin = oracle::random_in_box(rng, s.bounds());
        r.direction = oracle::random_unit(rng);
        rays.push_back(r);
        before.push_back(tlas.closest(r, s));
    }
    override_all_effects(s, EffectId::PathTraced);
    for (std::size_t i = 0; i < rays.size(); ++i) {
        const auto after = tlas.closest(rays[i], s);
        REQUIRE(after.has_value() == before[i].has_value());
        if (after) {
            CHECK(after->triangle == before[i]->triangle);
            CHECK(after->t == before[i]->t);
        }
    }
}

TEST_CASE("eval_material: hand-evaluated diffuse") {
    const Scene s = plane_scene(Rgb(1, 0, 0));
    const Hit hit = hit_at_origin(s);
    const Rgb c = eval_material(hit, Light::point({0, 1, 0}, Rgb(std::numbers::pi)), s);
    CHECK(c.r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.g == 0.0);
    CHECK(c.b == 0.0);
}

TEST_CASE("eval_material: light behind the surface") {
    const Scene s = plane_scene(Rgb(0.8));
    const Hit hit = hit_at_origin(s);
    CHECK(eval_material(hit, Light::point({0, -1, 0}, Rgb(10.0)), s).is_black());
    CHECK(eval_material(hit, Light::directional({0, 1, 0}, Rgb(1.0)), s).is_black());
}

TEST_CASE("eval_material: inverse square and linearity") {
    const Scene s = plane_scene(Rgb(0.6, 0.5, 0.4), Rgb(0.3));
    const Hit hit = hit_at_origin(s);
    const Rgb near = eval_material(hit, Light::point({0.3, 1, 0.2}, Rgb(2.0)), s);
    const Rgb far = eval_material(hit, Light::point({0.6, 2, 0.4}, Rgb(2.0)), s);
    CHECK(far.r == doctest::Approx(near.r / 4.0).epsilon(1e-12));
    const Rgb triple = eval_material(hit, Light::point({0.3, 1, 0.2}, Rgb(6.0)), s);
    CHECK(triple.g == doctest::Approx(3.0 * near.g).epsilon(1e-12));
}

TEST_CASE("resolve_hit faces the viewer") {
    const Scene s = plane_scene(Rgb(0.5));
    const Tlas tlas = build_accel(s);
    Ray below;
    below.origin = {0.2, -1, 0.1};
    below.direction = {0, 1, 0};
    const auto h = intersect_closest(below, tlas, s);
    REQUIRE(h);
    CHECK(h->normal.y == doctest::Approx(-1.0));
    CHECK(h->geometric_normal.y == doctest::Approx(-1.0));
    CHECK(length(h->position - Vec3{0.2, 0, 0.1}) < 1e-12);
}

}
