#include "rayvr/scene_json.hpp"

#include <fstream>
#include <map>

namespace rayvr {

using nlohmann::json;

namespace {

Vec3 read_vec3(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw SceneError(what + ": expected an array of 3 numbers");
    try {
        return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    } catch (const json::exception&) {
        throw SceneError(what + ": expected an array of 3 numbers");
    }
}

Rgb read_rgb(const json& j, const std::string& what) {
    const Vec3 v = read_vec3(j, what);
    return {v.x, v.y, v.z};
}

template <typename T>
T read_or(const json& obj, const char* key, T fallback, const std::string& what) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw SceneError(what + ": field '" + key + "' has the wrong type");
    }
}

const json& require(const json& obj, const char* key, const std::string& what) {
    if (!obj.is_object() || !obj.contains(key)) throw SceneError(what + ": missing field '" + key + "'");
    return obj.at(key);
}

std::shared_ptr<const HdrImage> load_environment_image(const std::filesystem::path& path) {
    try {
        if (path.extension() == ".pfm") return std::make_shared<HdrImage>(read_pfm(path));
        const LdrImage ldr = read_png(path);
        auto hdr = std::make_shared<HdrImage>(ldr.width, ldr.height);
        for (std::size_t i = 0; i < ldr.pixels.size(); ++i) {
            const Rgb8& p = ldr.pixels[i];
            hdr->pixels[i] = {srgb_decode(p[0] / 255.0), srgb_decode(p[1] / 255.0), srgb_decode(p[2] / 255.0)};
        }
        return hdr;
    } catch (const ImageIoError& e) {
        throw SceneError(std::string("environment: ") + e.what());
    }
}

}  // namespace

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json to_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

json material_to_json(const Material& m) {
    return json{{"id", m.id},
                {"albedo", to_json(m.albedo)},
                {"specular", to_json(m.specular)},
                {"emissive", to_json(m.emissive)},
                {"alpha", m.alpha},
                {"shininess", m.shininess},
                {"effect", std::string(to_string(m.effect))}};
}

json light_to_json(const Light& l) {
    if (l.kind == Light::Kind::Directional) {
        return json{{"type", "directional"}, {"direction", to_json(l.direction)}, {"intensity", to_json(l.intensity)}};
    }
    return json{{"type", "point"}, {"position", to_json(l.position)}, {"intensity", to_json(l.intensity)}};
}

Scene scene_from_json(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw SceneError("scene: top level must be an object");
    Scene scene;

    std::map<std::string, std::uint32_t> mesh_by_name;
    std::map<std::filesystem::path, std::vector<Mesh>> obj_cache;
    for (const json& entry : require(doc, "meshes", "scene")) {
        const std::string name = read_or<std::string>(entry, "name", "", "mesh");
        const std::string obj = require(entry, "obj", "mesh '" + name + "'").get<std::string>();
        if (name.empty()) throw SceneError("mesh: missing field 'name'");
        if (mesh_by_name.count(name)) throw SceneError("mesh '" + name + "' declared twice");
        const std::filesystem::path path = base_dir / obj;
        auto it = obj_cache.find(path);
        if (it == obj_cache.end()) {
            try {
                it = obj_cache.emplace(path, load_obj(path)).first;
            } catch (const ObjParseError& e) {
                throw SceneError(std::string("mesh '") + name + "': " + e.what());
            }
        }
        // All groups of the file form one mesh.
        Mesh merged;
        merged.name = name;
        for (const Mesh& part : it->second) {
            const auto base = static_cast<std::uint32_t>(merged.positions.size());
            merged.positions.insert(merged.positions.end(), part.positions.begin(), part.positions.end());
            merged.normals.insert(merged.normals.end(), part.normals.begin(), part.normals.end());
            for (auto tri : part.triangles) merged.triangles.push_back({tri[0] + base, tri[1] + base, tri[2] + base});
        }
        if (merged.triangles.empty()) throw SceneError("mesh '" + name + "' has no triangles");
        mesh_by_name[name] = static_cast<std::uint32_t>(scene.meshes.size());
        scene.meshes.push_back(std::move(merged));
        scene.mesh_sources.push_back(obj);
    }

    for (const json& entry : require(doc, "materials", "scene")) {
        Material m;
        m.id = require(entry, "id", "material").get<int>();
        const std::string what = "material " + std::to_string(m.id);
        if (entry.contains("albedo")) m.albedo = read_rgb(entry["albedo"], what + " albedo");
        if (entry.contains("specular")) m.specular = read_rgb(entry["specular"], what + " specular");
        if (entry.contains("emissive")) m.emissive = read_rgb(entry["emissive"], what + " emissive");
        m.alpha = read_or<double>(entry, "alpha", 1.0, what);
        m.shininess = read_or<double>(entry, "shininess", 32.0, what);
        try {
            m.effect = parse_effect(read_or<std::string>(entry, "effect", "raster", what));
        } catch (const std::invalid_argument& e) {
            throw SceneError(what + ": " + e.what());
        }
        scene.materials.push_back(m);
    }

    for (const json& entry : require(doc, "instances", "scene")) {
        Instance inst;
        const json& mesh_ref = require(entry, "mesh", "instance");
        if (mesh_ref.is_string()) {
            auto it = mesh_by_name.find(mesh_ref.get<std::string>());
            if (it == mesh_by_name.end()) throw SceneError("instance references unknown mesh '" + mesh_ref.get<std::string>() + "'");
            inst.mesh = it->second;
        } else {
            inst.mesh = mesh_ref.get<std::uint32_t>();
        }
        inst.material_id = require(entry, "material", "instance").get<int>();
        if (entry.contains("transform")) {
            const json& t = entry["transform"];
            if (!t.is_array() || t.size() != 16) throw SceneError("instance transform must have 16 numbers");
            for (int i = 0; i < 16; ++i) inst.transform.m[i] = t[i].get<double>();
        }
        scene.instances.push_back(inst);
    }

    if (doc.contains("lights")) {
        for (const json& entry : doc["lights"]) {
            const std::string type = read_or<std::string>(entry, "type", "point", "light");
            const Rgb intensity = read_rgb(require(entry, "intensity", "light"), "light intensity");
            if (type == "point") {
                scene.lights.push_back(Light::point(read_vec3(require(entry, "position", "point light"), "light position"), intensity));
            } else if (type == "directional") {
                Light l;
                l.kind = Light::Kind::Directional;
                l.direction = read_vec3(require(entry, "direction", "directional light"), "light direction");
                l.intensity = intensity;
                scene.lights.push_back(l);
            } else {
                throw SceneError("light: unknown type '" + type + "'");
            }
        }
    }

    scene.environment = Environment::constant(Rgb(0.0));
    if (doc.contains("environment")) {
        const json& env = doc["environment"];
        if (env.contains("constant")) {
            scene.environment = Environment::constant(read_rgb(env["constant"], "environment constant"));
        } else if (env.contains("image")) {
            const std::string src = env["image"].get<std::string>();
            scene.environment = Environment::from_image(load_environment_image(base_dir / src), src);
        } else {
            throw SceneError("environment: expected 'constant' or 'image'");
        }
    }

    if (doc.contains("camera")) {
        const json& cam = doc["camera"];
        if (cam.contains("position")) scene.camera.position = read_vec3(cam["position"], "camera position");
        if (cam.contains("look_at")) scene.camera.look_at = read_vec3(cam["look_at"], "camera look_at");
        if (cam.contains("up")) scene.camera.up = read_vec3(cam["up"], "camera up");
        scene.camera.fov_y_deg = read_or<double>(cam, "fov_y_deg", scene.camera.fov_y_deg, "camera");
        scene.camera.ipd = read_or<double>(cam, "ipd", scene.camera.ipd, "camera");
    }

    scene.finalize();
    return scene;
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open scene '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SceneError("scene '" + path.string() + "': " + e.what());
    }
    try {
        return scene_from_json(doc, path.parent_path());
    } catch (const json::exception& e) {
        throw SceneError("scene '" + path.string() + "': " + e.what());
    }
}

json scene_to_json(const Scene& scene) {
    json doc;
    doc["meshes"] = json::array();
    for (std::size_t i = 0; i < scene.meshes.size(); ++i) {
        doc["meshes"].push_back({{"name", scene.meshes[i].name},
                                 {"obj", i < scene.mesh_sources.size() ? scene.mesh_sources[i] : std::string()}});
    }
    doc["materials"] = json::array();
    for (const Material& m : scene.materials) doc["materials"].push_back(material_to_json(m));
    doc["instances"] = json::array();
    for (const Instance& inst : scene.instances) {
        doc["instances"].push_back({{"mesh", scene.meshes[inst.mesh].name},
                                    {"material", inst.material_id},
                                    {"transform", inst.transform.m}});
    }
    doc["lights"] = json::array();
    for (const Light& l : scene.lights) doc["lights"].push_back(light_to_json(l));
    if (scene.environment.is_constant()) {
        doc["environment"] = {{"constant", to_json(scene.environment.constant_radiance())}};
    } else {
        doc["environment"] = {{"image", scene.environment.source()}};
    }
    doc["camera"] = {{"position", to_json(scene.camera.position)},
                     {"look_at", to_json(scene.camera.look_at)},
                     {"up", to_json(scene.camera.up)},
                     {"fov_y_deg", scene.camera.fov_y_deg},
                     {"ipd", scene.camera.ipd}};
    return doc;
}

}  // namespace rayvr
