#pragma once

#include <filesystem>
#include <string>

#include "rayvr/bench.hpp"
#include "rayvr/scene.hpp"
#include "rayvr/shapes.hpp"

#ifndef RAYVR_SCENE_DIR
#error "RAYVR_SCENE_DIR must point at the bundled scenes"
#endif

namespace fixture {

using namespace rayvr;

inline std::filesystem::path scene_path(const std::string& name) {
    return std::filesystem::path(RAYVR_SCENE_DIR) / (name + ".json");
}

inline const char* const kBundled[] = {"arcade-like", "cornell", "kitchen"};

inline Material material(int id, Rgb albedo, EffectId fx = EffectId::Raster, Rgb specular = Rgb(0.0)) {
    Material m;
    m.id = id;
    m.albedo = albedo;
    m.specular = specular;
    m.effect = fx;
    return m;
}

// Small in-memory scene assembly.
struct Builder {
    Scene scene;

    Builder& add(const Material& m) {
        scene.materials.push_back(m);
        return *this;
    }
    Builder& add(const Mesh& mesh, int material_id, const Mat4& transform = Mat4::identity()) {
        scene.meshes.push_back(mesh);
        Instance inst;
        inst.mesh = static_cast<std::uint32_t>(scene.meshes.size() - 1);
        inst.material_id = material_id;
        inst.transform = transform;
        scene.instances.push_back(inst);
        return *this;
    }
    Builder& light(const Light& l) {
        scene.lights.push_back(l);
        return *this;
    }
    Builder& env(const Rgb& c) {
        scene.environment = Environment::constant(c);
        return *this;
    }
    Builder& camera(const Vec3& position, const Vec3& look_at, double fov_deg = 60.0) {
        scene.camera.position = position;
        scene.camera.look_at = look_at;
        scene.camera.fov_y_deg = fov_deg;
        return *this;
    }
    Scene build() {
        scene.finalize();
        return scene;
    }
};

// Albedo-1 diffuse sphere in a constant environment, no lights.
inline Scene furnace(const Rgb& environment) {
    return Builder{}
        .add(material(1, Rgb(1.0), EffectId::PathTraced))
        .add(shapes::uv_sphere("ball", {0, 0, 0}, 1.0, 48, 24), 1)
        .env(environment)
        .camera({0, 0, 3.2}, {0, 0, 0}, 45.0)
        .build();
}

// Diffuse floor, one blocker and two unequal point lights, so picking one
// light at random is a genuinely noisy estimator and some points are in
// partial shadow.
inline Scene two_light_floor() {
    return Builder{}
        .add(material(1, Rgb(0.7, 0.6, 0.5), EffectId::PathTraced, Rgb(0.2)))
        .add(material(2, Rgb(0.3), EffectId::Raster))
        .add(shapes::quad("floor", {-4, 0, 4}, {8, 0, 0}, {0, 0, -8}), 1)
        .add(shapes::box("blocker", {-0.5, 0.8, -0.5}, {0.5, 1.0, 0.5}), 2)
        .light(Light::point({-1.0, 3.0, 0.5}, Rgb(12.0)))
        .light(Light::point({2.0, 2.0, -1.0}, Rgb(5.0, 4.0, 3.0)))
        .env(Rgb(0.0))
        .camera({0, 4, 5}, {0, 0, 0})
        .build();
}

// Pixels next to a coverage or instance boundary in a 3x3 window.
inline bool silhouette(const GBuffer& gb, int x, int y) {
    const std::size_t c = gb.index(x, y);
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= gb.size.width || ny >= gb.size.height) continue;
            const std::size_t n = gb.index(nx, ny);
            if (gb.coverage[n] != gb.coverage[c]) return true;
            if (gb.coverage[n] && gb.instance[n] != gb.instance[c]) return true;
        }
    }
    return false;
}

}  // namespace fixture
