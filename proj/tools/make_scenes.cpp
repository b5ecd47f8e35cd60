// Regenerates the bundled scenes (JSON + OBJ + environment map).
// Usage: make_scenes OUTPUT_DIR

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "rayvr/image.hpp"
#include "rayvr/scene.hpp"
#include "rayvr/shapes.hpp"

using namespace rayvr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

struct SceneBuilder {
    fs::path dir;
    std::string prefix;
    json doc{{"meshes", json::array()}, {"instances", json::array()}, {"materials", json::array()},
             {"lights", json::array()}};
    std::size_t triangles = 0;
    std::map<std::string, std::size_t> mesh_tris;

    void mesh(const Mesh& m) {
        const std::string file = prefix + "_" + m.name + ".obj";
        write_obj(dir / file, {m});
        doc["meshes"].push_back({{"name", m.name}, {"obj", file}});
        mesh_tris[m.name] = m.triangles.size();
    }

    void material(int id, const Vec3& albedo, const Vec3& specular, const std::string& effect, double shininess = 32,
                  const Vec3& emissive = {}, double alpha = 1.0) {
        doc["materials"].push_back({{"id", id},
                                    {"albedo", vec(albedo)},
                                    {"specular", vec(specular)},
                                    {"emissive", vec(emissive)},
                                    {"alpha", alpha},
                                    {"shininess", shininess},
                                    {"effect", effect}});
    }

    void instance(const std::string& mesh, int material, const Mat4& transform = Mat4::identity()) {
        doc["instances"].push_back({{"mesh", mesh}, {"material", material}, {"transform", transform.m}});
        triangles += mesh_tris.at(mesh);
    }

    void point_light(const Vec3& p, const Vec3& intensity) {
        doc["lights"].push_back({{"type", "point"}, {"position", vec(p)}, {"intensity", vec(intensity)}});
    }

    void camera(const Vec3& position, const Vec3& look_at, double fov) {
        doc["camera"] = {{"position", vec(position)},
                         {"look_at", vec(look_at)},
                         {"up", vec({0, 1, 0})},
                         {"fov_y_deg", fov},
                         {"ipd", 0.064}};
    }

    void save(const std::string& name) {
        std::ofstream(dir / name) << doc.dump(2) << "\n";
        std::cout << name << ": " << doc["instances"].size() << " instances, " << triangles << " triangles\n";
    }
};

// Objects resting on a surface sit this far above it, so no two faces coincide.
constexpr double kRest = 1e-3;

Mat4 place(const Vec3& t, const Vec3& s = {1, 1, 1}, double yaw_deg = 0.0) {
    return Mat4::translation(t) * Mat4::rotation({0, 1, 0}, radians(yaw_deg)) * Mat4::scale(s);
}

// Inward-facing room shell: floor, ceiling and four walls as separate quads.
void add_room(SceneBuilder& b, const Vec3& lo, const Vec3& hi, int floor_mat, int wall_mat, int ceiling_mat) {
    const Vec3 d = hi - lo;
    b.mesh(shapes::quad("floor", {lo.x, lo.y, hi.z}, {d.x, 0, 0}, {0, 0, -d.z}));
    b.mesh(shapes::quad("ceiling", {lo.x, hi.y, lo.z}, {d.x, 0, 0}, {0, 0, d.z}));
    Mesh walls;
    walls.name = "walls";
    shapes::append(walls, shapes::quad("w0", {lo.x, lo.y, lo.z}, {d.x, 0, 0}, {0, d.y, 0}));
    shapes::append(walls, shapes::quad("w1", {hi.x, lo.y, hi.z}, {-d.x, 0, 0}, {0, d.y, 0}));
    shapes::append(walls, shapes::quad("w2", {lo.x, lo.y, hi.z}, {0, 0, -d.z}, {0, d.y, 0}));
    shapes::append(walls, shapes::quad("w3", {hi.x, lo.y, lo.z}, {0, 0, d.z}, {0, d.y, 0}));
    b.mesh(walls);
    b.instance("floor", floor_mat);
    b.instance("ceiling", ceiling_mat);
    b.instance("walls", wall_mat);
}

void arcade(const fs::path& dir) {
    SceneBuilder b{dir, "arcade"};
    b.material(1, {0.6, 0.6, 0.6}, {0.1, 0.1, 0.1}, "raster");               // floor
    b.material(2, {0.55, 0.5, 0.65}, {0, 0, 0}, "raster_shadows");           // walls
    b.material(3, {0.8, 0.8, 0.8}, {0, 0, 0}, "raster");                     // ceiling
    b.material(4, {0.7, 0.15, 0.1}, {0.2, 0.2, 0.2}, "raster_shadows", 64);  // cabinet
    b.material(5, {0.05, 0.05, 0.05}, {0.85, 0.85, 0.9}, "mirror", 256);     // screen
    b.material(6, {0.2, 0.4, 0.8}, {0.3, 0.3, 0.3}, "path", 48);             // ball

    add_room(b, {-3, 0, -4}, {3, 3, 3}, 1, 2, 3);
    b.mesh(shapes::box("cabinet", {-0.5, 0, -0.4}, {0.5, 1.8, 0.4}));
    b.mesh(shapes::quad("screen", {-0.4, -0.3, 0}, {0.8, 0, 0}, {0, 0.6, 0}));
    b.mesh(shapes::uv_sphere("ball", {0, 0, 0}, 1.0, 24, 16));
    b.instance("cabinet", 4, place({-1.2, kRest, -2.8}, {1, 1, 1}, 15));
    b.instance("cabinet", 4, place({1.2, kRest, -2.8}, {1, 1, 1}, -15));
    b.instance("screen", 5, place({-1.2, 1.25 + kRest, -2.8}, {1, 1, 1}, 15) * Mat4::translation({0, 0, 0.41}));
    b.instance("screen", 5, place({1.2, 1.25 + kRest, -2.8}, {1, 1, 1}, -15) * Mat4::translation({0, 0, 0.41}));
    b.instance("ball", 6, place({0, 0.35, -1.5}, {0.35, 0.35, 0.35}));
    b.point_light({0, 2.7, -1.0}, {6, 6, 6});
    b.doc["environment"] = {{"constant", vec({0.1, 0.1, 0.12})}};
    b.camera({0, 1.5, 2.0}, {0, 1.1, -2.5}, 60);
    b.save("arcade-like.json");
}

void cornell(const fs::path& dir) {
    SceneBuilder b{dir, "cornell"};
    b.material(1, {0.73, 0.73, 0.73}, {0, 0, 0}, "raster_shadows");             // white
    b.material(2, {0.65, 0.05, 0.05}, {0, 0, 0}, "raster_shadows");             // red
    b.material(3, {0.12, 0.45, 0.15}, {0, 0, 0}, "raster_shadows");             // green
    b.material(4, {0.02, 0.02, 0.02}, {0.9, 0.9, 0.9}, "mirror", 512);          // mirror
    b.material(5, {0.6, 0.55, 0.4}, {0.25, 0.25, 0.25}, "raster_shadows", 48);  // glossy
    b.material(6, {0.9, 0.7, 0.2}, {0.1, 0.1, 0.1}, "path", 32);                // gold-ish
    b.material(7, {0.3, 0.6, 0.9}, {0, 0, 0}, "raster", 32, {}, 0.25);          // transparent veil

    const double s = 2.0;  // box spans [-1, 1] x [0, 2] x [-1, 1]
    b.mesh(shapes::quad("floor", {-1, 0, 1}, {s, 0, 0}, {0, 0, -s}));
    b.mesh(shapes::quad("ceiling", {-1, s, -1}, {s, 0, 0}, {0, 0, s}));
    b.mesh(shapes::quad("back", {-1, 0, -1}, {s, 0, 0}, {0, s, 0}));
    b.mesh(shapes::quad("left", {-1, 0, 1}, {0, 0, -s}, {0, s, 0}));
    b.mesh(shapes::quad("right", {1, 0, -1}, {0, 0, s}, {0, s, 0}));
    b.mesh(shapes::box("block", {-0.5, 0, -0.5}, {0.5, 1, 0.5}));
    b.mesh(shapes::uv_sphere("sphere", {0, 0, 0}, 1.0, 48, 32));
    b.mesh(shapes::torus("ring", {0, 0, 0}, 1.0, 0.3, 48, 24));
    b.mesh(shapes::quad("veil", {-0.5, 0, 0}, {1, 0, 0}, {0, 1, 0}));

    b.instance("floor", 1);
    b.instance("ceiling", 1);
    b.instance("back", 1);
    b.instance("left", 2);
    b.instance("right", 3);
    b.instance("block", 4, place({-0.35, kRest, -0.35}, {0.55, 1.2, 0.55}, 18));
    b.instance("block", 5, place({0.4, kRest, 0.3}, {0.55, 0.55, 0.55}, -17));
    b.instance("sphere", 6, place({0.4, 0.8 + kRest, 0.3}, {0.25, 0.25, 0.25}));
    b.instance("ring", 4, place({-0.45, 0.12, 0.55}, {0.18, 0.18, 0.18}));
    b.instance("veil", 7, place({0, 0.4, 0.8}, {0.6, 0.6, 1}));
    b.point_light({-0.4, 1.9, 0.2}, {1.6, 1.5, 1.3});
    b.point_light({0.5, 1.9, -0.3}, {1.2, 1.2, 1.4});
    b.doc["environment"] = {{"constant", vec({0.02, 0.02, 0.02})}};
    b.camera({0, 1.0, 3.4}, {0, 1.0, 0}, 40);
    b.save("cornell.json");
}

// Lat-long sky: bright horizon fading to blue zenith, dark ground.
void write_sky(const fs::path& path) {
    HdrImage sky(64, 32);
    for (int y = 0; y < sky.height; ++y) {
        const double v = (y + 0.5) / sky.height;
        const double elevation = std::cos(std::numbers::pi * v);
        for (int x = 0; x < sky.width; ++x) {
            Rgb c;
            if (elevation >= 0.0) {
                c = Rgb{0.9, 0.85, 0.75} * (1.0 - elevation) + Rgb{0.25, 0.4, 0.8} * elevation;
            } else {
                c = Rgb{0.15, 0.13, 0.1};
            }
            sky.at(x, y) = c;
        }
    }
    write_pfm(path, sky);
}

void kitchen(const fs::path& dir) {
    SceneBuilder b{dir, "kitchen"};
    b.material(1, {0.55, 0.45, 0.35}, {0.05, 0.05, 0.05}, "raster");            // floor
    b.material(2, {0.85, 0.83, 0.78}, {0, 0, 0}, "raster_shadows");             // walls
    b.material(3, {0.9, 0.9, 0.9}, {0, 0, 0}, "raster");                        // ceiling
    b.material(4, {0.35, 0.22, 0.12}, {0.1, 0.1, 0.1}, "raster_shadows", 24);   // wood
    b.material(5, {0.75, 0.75, 0.72}, {0.2, 0.2, 0.2}, "raster_shadows", 96);   // counter top
    b.material(6, {0.1, 0.1, 0.1}, {0.8, 0.8, 0.8}, "mirror", 400);             // steel
    b.material(7, {0.8, 0.1, 0.08}, {0.15, 0.15, 0.15}, "path", 64);            // apples
    b.material(8, {0.9, 0.9, 0.85}, {0.1, 0.1, 0.1}, "raster_shadows", 128);    // ceramic
    b.material(9, {0.95, 0.9, 0.7}, {0, 0, 0}, "raster", 32, {0.9, 0.85, 0.6});  // lamp shades
    b.material(10, {0.02, 0.02, 0.02}, {0.95, 0.95, 0.95}, "mirror", 800);      // wall mirror

    add_room(b, {-4, 0, -4}, {4, 3, 4}, 1, 2, 3);
    b.mesh(shapes::box("cube", {-0.5, 0, -0.5}, {0.5, 1, 0.5}));
    b.mesh(shapes::cylinder("table_top", {0, 0, 0}, 1.0, 1.0, 96));
    b.mesh(shapes::cylinder("leg", {0, 0, 0}, 1.0, 1.0, 24));
    b.mesh(shapes::uv_sphere("apple", {0, 0, 0}, 1.0, 40, 28));
    b.mesh(shapes::uv_sphere("bowl", {0, 0, 0}, 1.0, 64, 40));
    b.mesh(shapes::cylinder("pot", {0, 0, 0}, 1.0, 1.0, 64));
    b.mesh(shapes::torus("handle", {0, 0, 0}, 1.0, 0.15, 48, 20));
    b.mesh(shapes::uv_sphere("kettle", {0, 0, 0}, 1.0, 112, 64));
    b.mesh(shapes::uv_sphere("lamp", {0, 0, 0}, 1.0, 32, 20));
    b.mesh(shapes::torus("plate", {0, 0, 0}, 1.0, 0.12, 64, 16));
    b.mesh(shapes::quad("mirror", {-0.5, 0, 0}, {1, 0, 0}, {0, 1, 0}));

    // Counters along the back wall, cabinets above.
    for (int i = 0; i < 4; ++i) {
        const double x = -3.0 + 1.6 * i;
        b.instance("cube", 4, place({x, kRest, -3.55}, {1.5, 0.9, 0.8}));
        b.instance("cube", 5, place({x, 0.9 + 2 * kRest, -3.55}, {1.55, 0.05, 0.85}));
        b.instance("cube", 4, place({x, 1.9, -3.75}, {1.5, 0.7, 0.45}));
    }
    // Table with legs.
    b.instance("table_top", 4, place({0, 0.75, -0.5}, {1.0, 0.05, 1.0}));
    for (int i = 0; i < 4; ++i) {
        const double a = std::numbers::pi * (0.25 + 0.5 * i);
        b.instance("leg", 4, place({0.7 * std::cos(a), kRest, -0.5 + 0.7 * std::sin(a)}, {0.04, 0.75 - 2 * kRest, 0.04}));
    }
    // Chairs.
    for (int i = 0; i < 3; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 3.0 + 0.3;
        const Vec3 c{1.5 * std::cos(a), 0, -0.5 + 1.5 * std::sin(a)};
        b.instance("cube", 4, place(c + Vec3{0, 0.42, 0}, {0.45, 0.04, 0.45}));
        b.instance("cube", 4, place(c + Vec3{0, kRest, 0}, {0.05, 0.42 - 2 * kRest, 0.05}));
    }
    b.instance("bowl", 8, place({0, 0.88, -0.5}, {0.3, 0.1, 0.3}));
    for (int i = 0; i < 6; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 6.0;
        b.instance("apple", 7, place({0.14 * std::cos(a), 0.93, -0.5 + 0.14 * std::sin(a)}, {0.06, 0.06, 0.06}));
    }
    for (int i = 0; i < 4; ++i) {
        const double a = std::numbers::pi * (0.5 * i + 0.1);
        b.instance("plate", 8, place({0.6 * std::cos(a), 0.81, -0.5 + 0.6 * std::sin(a)}, {0.13, 0.13, 0.13}));
    }
    // Pots and kettle on the counters.
    for (int i = 0; i < 3; ++i) {
        const Vec3 p{-2.6 + 1.7 * i, 0.95 + 3 * kRest, -3.5};
        b.instance("pot", 6, place(p, {0.18, 0.2, 0.18}));
        b.instance("handle", 6, place(p + Vec3{0.22, 0.15, 0}, {0.06, 0.06, 0.06}) * Mat4::rotation({1, 0, 0}, radians(90)));
    }
    b.instance("kettle", 6, place({2.4, 1.12, -3.5}, {0.17, 0.15, 0.17}));
    b.instance("handle", 6, place({2.4, 1.3, -3.5}, {0.12, 0.12, 0.12}) * Mat4::rotation({1, 0, 0}, radians(90)));
    // Pendant lamps.
    for (int i = 0; i < 3; ++i) {
        b.instance("lamp", 9, place({-0.8 + 0.8 * i, 2.3, -0.5}, {0.14, 0.1, 0.14}));
        b.instance("leg", 6, place({-0.8 + 0.8 * i, 2.4, -0.5}, {0.008, 0.6 - kRest, 0.008}));
    }
    b.instance("mirror", 10, place({3.95, 0.9, -0.5}, {1.6, 1.2, 1}, -90));

    b.point_light({-0.8, 2.1, -0.5}, {1.5, 1.4, 1.1});
    b.point_light({0.8, 2.1, -0.5}, {1.5, 1.4, 1.1});
    b.point_light({0, 2.8, 2.5}, {3, 3, 3});
    write_sky(dir / "kitchen_sky.pfm");
    b.doc["environment"] = {{"image", "kitchen_sky.pfm"}};
    b.camera({-2.2, 1.6, 3.2}, {0.3, 0.9, -1.5}, 55);
    b.save("kitchen.json");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_scenes OUTPUT_DIR\n";
        return 2;
    }
    const fs::path dir = argv[1];
    fs::create_directories(dir);
    arcade(dir);
    cornell(dir);
    kitchen(dir);
    return 0;
}
