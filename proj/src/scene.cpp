#include "rayvr/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

namespace rayvr {

std::string_view to_string(EffectId effect) {
    switch (effect) {
        case EffectId::Raster: return "raster";
        case EffectId::RasterShadows: return "raster_shadows";
        case EffectId::Mirror: return "mirror";
        case EffectId::PathTraced: return "path";
    }
    return "unknown";
}

EffectId parse_effect(std::string_view name) {
    for (EffectId e : kAllEffects) {
        if (to_string(e) == name) return e;
    }
    throw std::invalid_argument("unknown effect '" + std::string(name) + "'");
}

Aabb Mesh::bounds() const {
    Aabb box;
    for (const auto& tri : triangles) {
        for (auto idx : tri) box.expand(positions[idx]);
    }
    return box;
}

void Mesh::validate() const {
    if (normals.size() != positions.size()) {
        throw std::invalid_argument("mesh '" + name + "': normal count does not match position count");
    }
    if (!uvs.empty() && uvs.size() != positions.size()) {
        throw std::invalid_argument("mesh '" + name + "': uv count does not match position count");
    }
    for (const auto& tri : triangles) {
        for (auto idx : tri) {
            if (idx >= positions.size()) {
                throw std::invalid_argument("mesh '" + name + "': vertex index out of range");
            }
        }
    }
}

Light Light::point(const Vec3& position, const Rgb& intensity) {
    Light l;
    l.kind = Kind::Point;
    l.position = position;
    l.intensity = intensity;
    return l;
}

Light Light::directional(const Vec3& direction, const Rgb& intensity) {
    Light l;
    l.kind = Kind::Directional;
    l.direction = normalize(direction);
    l.intensity = intensity;
    return l;
}

Environment Environment::constant(const Rgb& radiance) {
    Environment env;
    env.constant_ = radiance;
    return env;
}

Environment Environment::from_image(std::shared_ptr<const HdrImage> image, std::string source) {
    if (!image || image->width <= 0 || image->height <= 0) {
        throw std::invalid_argument("environment image is empty");
    }
    Environment env;
    env.image_ = std::move(image);
    env.source_ = std::move(source);
    return env;
}

Rgb Environment::lookup(const Vec3& d) const {
    if (!image_) return constant_;
    const HdrImage& img = *image_;
    const double u = std::atan2(d.x, -d.z) / (2.0 * std::numbers::pi) + 0.5;
    const double v = std::acos(std::clamp(d.y / length(d), -1.0, 1.0)) / std::numbers::pi;
    const double fx = u * img.width - 0.5;
    const double fy = v * img.height - 0.5;
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0;
    const double ty = fy - y0;
    auto texel = [&](int x, int y) {
        x = ((x % img.width) + img.width) % img.width;
        y = std::clamp(y, 0, img.height - 1);
        return img.at(x, y);
    };
    const Rgb top = texel(x0, y0) * (1.0 - tx) + texel(x0 + 1, y0) * tx;
    const Rgb bottom = texel(x0, y0 + 1) * (1.0 - tx) + texel(x0 + 1, y0 + 1) * tx;
    return top * (1.0 - ty) + bottom * ty;
}

void Scene::finalize() {
    if (mesh_sources.size() < meshes.size()) mesh_sources.resize(meshes.size());
    material_lookup_.clear();
    for (std::uint32_t i = 0; i < materials.size(); ++i) {
        const Material& m = materials[i];
        if (!material_lookup_.emplace(m.id, i).second) {
            throw SceneError("duplicate material id " + std::to_string(m.id));
        }
        for (const Rgb& c : {m.albedo, m.specular, m.emissive}) {
            for (double ch : {c.r, c.g, c.b}) {
                if (!(ch >= 0.0 && ch <= 1.0)) {
                    throw SceneError("material " + std::to_string(m.id) + ": color channel outside [0, 1]");
                }
            }
        }
        if (!(m.alpha >= 0.0 && m.alpha <= 1.0)) {
            throw SceneError("material " + std::to_string(m.id) + ": alpha outside [0, 1]");
        }
        if (!(m.shininess > 0.0)) {
            throw SceneError("material " + std::to_string(m.id) + ": shininess must be > 0");
        }
    }
    for (const Mesh& mesh : meshes) {
        try {
            mesh.validate();
        } catch (const std::invalid_argument& e) {
            throw SceneError(e.what());
        }
    }
    bounds_ = Aabb{};
    for (std::size_t i = 0; i < instances.size(); ++i) {
        Instance& inst = instances[i];
        if (inst.mesh >= meshes.size()) {
            throw SceneError("instance " + std::to_string(i) + " references missing mesh " + std::to_string(inst.mesh));
        }
        auto it = material_lookup_.find(inst.material_id);
        if (it == material_lookup_.end()) {
            throw SceneError("instance " + std::to_string(i) + " references unknown material id " +
                             std::to_string(inst.material_id));
        }
        inst.material_index = it->second;
        try {
            inst.inverse_transform = inverse(inst.transform);
        } catch (const std::domain_error&) {
            throw SceneError("instance " + std::to_string(i) + " has a singular transform");
        }
        inst.normal_matrix = inst.inverse_transform.transposed();
        bounds_.expand(transform_bounds(inst.transform, meshes[inst.mesh].bounds()));
    }
    for (Light& l : lights) {
        if (l.intensity.r < 0.0 || l.intensity.g < 0.0 || l.intensity.b < 0.0) {
            throw SceneError("light intensity must be non-negative");
        }
        if (l.kind == Light::Kind::Directional) {
            const double len = length(l.direction);
            if (!(len > 0.0)) throw SceneError("directional light has zero direction");
            l.direction = l.direction / len;
        }
    }
    scale_ = bounds_.empty() ? 1.0 : std::max(length(bounds_.extent()), 1e-9);
}

const Material* Scene::find_material(int id) const {
    auto it = material_lookup_.find(id);
    return it == material_lookup_.end() ? nullptr : &materials[it->second];
}

std::uint32_t Scene::material_index(int id) const {
    auto it = material_lookup_.find(id);
    if (it == material_lookup_.end()) throw SceneError("unknown material id " + std::to_string(id));
    return it->second;
}

std::size_t Scene::triangle_count() const {
    std::size_t n = 0;
    for (const Instance& inst : instances) n += meshes[inst.mesh].triangles.size();
    return n;
}

bool set_material_effect(Scene& scene, int material_id, EffectId effect) {
    const std::uint32_t index = scene.material_index(material_id);
    Material& m = scene.materials[index];
    if (m.effect == effect) return false;
    m.effect = effect;
    scene.bump_revision();
    return true;
}

void override_all_effects(Scene& scene, EffectId effect) {
    for (const Material& m : scene.materials) set_material_effect(scene, m.id, effect);
}

LightSample sample_light(const Light& light, const Vec3& p) {
    LightSample s;
    if (light.kind == Light::Kind::Directional) {
        s.wi = -light.direction;
        s.distance = std::numeric_limits<double>::infinity();
        s.irradiance = light.intensity;
        return s;
    }
    const Vec3 to_light = light.position - p;
    const double d2 = dot(to_light, to_light);
    s.distance = std::sqrt(d2);
    s.wi = to_light / s.distance;
    s.irradiance = light.intensity / d2;
    return s;
}

Rgb eval_material(const Hit& hit, const Light& light, const Scene& scene) {
    const Material& m = scene.material_at(hit.material_index);
    const LightSample ls = sample_light(light, hit.position);
    const double cos_theta = dot(hit.normal, ls.wi);
    if (cos_theta <= 0.0) return {};
    Rgb brdf = m.albedo * (1.0 / std::numbers::pi);
    if (!m.specular.is_black()) {
        const Vec3 h = normalize(ls.wi + hit.wo);
        const double n_dot_h = std::max(0.0, dot(hit.normal, h));
        const double lobe = (m.shininess + 8.0) / (8.0 * std::numbers::pi) * std::pow(n_dot_h, m.shininess);
        brdf += m.specular * lobe;
    }
    return brdf * ls.irradiance * cos_theta;
}

Hit resolve_hit(const Scene& scene, std::uint32_t instance, std::uint32_t triangle, double u, double v, double t,
                const Vec3& direction) {
    const Instance& inst = scene.instances[instance];
    const Mesh& mesh = scene.meshes[inst.mesh];
    const auto& tri = mesh.triangles[triangle];
    const double w = 1.0 - u - v;

    const Vec3 p0 = inst.transform.transform_point(mesh.positions[tri[0]]);
    const Vec3 p1 = inst.transform.transform_point(mesh.positions[tri[1]]);
    const Vec3 p2 = inst.transform.transform_point(mesh.positions[tri[2]]);

    Hit hit;
    hit.t = t;
    hit.instance = instance;
    hit.triangle = triangle;
    hit.u = u;
    hit.v = v;
    hit.position = p0 * w + p1 * u + p2 * v;
    hit.wo = -normalize(direction);
    hit.material_index = inst.material_index;
    hit.material_id = scene.materials[inst.material_index].id;

    Vec3 ng = cross(p1 - p0, p2 - p0);
    const double ng_len = length(ng);
    ng = ng_len > 0.0 ? ng / ng_len : hit.wo;
    if (dot(ng, hit.wo) < 0.0) ng = -ng;
    hit.geometric_normal = ng;

    const Vec3 n_obj = mesh.normals[tri[0]] * w + mesh.normals[tri[1]] * u + mesh.normals[tri[2]] * v;
    Vec3 ns = inst.normal_matrix.transform_vector(n_obj);
    const double ns_len = length(ns);
    ns = ns_len > 0.0 ? ns / ns_len : ng;
    if (dot(ns, ng) < 0.0) ns = -ns;
    hit.normal = ns;
    return hit;
}

// ---------------------------------------------------------------------------
// OBJ

ObjParseError::ObjParseError(const std::string& file, int line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

struct ObjVertexKey {
    int position;
    int uv;
    int normal;
    auto operator<=>(const ObjVertexKey&) const = default;
};

class ObjMeshBuilder {
public:
    explicit ObjMeshBuilder(std::string name) { mesh_.name = std::move(name); }

    bool empty() const { return mesh_.triangles.empty(); }

    void add_face(const std::vector<ObjVertexKey>& face, const std::vector<Vec3>& positions,
                  const std::vector<Vec2>& uvs, const std::vector<Vec3>& normals) {
        std::vector<std::uint32_t> local;
        local.reserve(face.size());
        for (const ObjVertexKey& key : face) {
            auto [it, inserted] = lookup_.try_emplace(key, static_cast<std::uint32_t>(mesh_.positions.size()));
            if (inserted) {
                mesh_.positions.push_back(positions[key.position]);
                mesh_.uvs.push_back(key.uv >= 0 ? uvs[key.uv] : Vec2{});
                mesh_.normals.push_back(key.normal >= 0 ? normals[key.normal] : Vec3{});
                source_position_.push_back(key.position);
                has_normal_.push_back(key.normal >= 0);
                any_uv_ = any_uv_ || key.uv >= 0;
            }
            local.push_back(it->second);
        }
        for (std::size_t i = 1; i + 1 < local.size(); ++i) {
            mesh_.triangles.push_back({local[0], local[i], local[i + 1]});
        }
    }

    Mesh finish() {
        // Area-weighted normals, shared across all vertices with the same OBJ position.
        std::map<int, Vec3> accumulated;
        for (const auto& tri : mesh_.triangles) {
            const Vec3& a = mesh_.positions[tri[0]];
            const Vec3& b = mesh_.positions[tri[1]];
            const Vec3& c = mesh_.positions[tri[2]];
            const Vec3 weighted = cross(b - a, c - a);
            for (auto idx : tri) accumulated[source_position_[idx]] += weighted;
        }
        for (std::size_t i = 0; i < mesh_.normals.size(); ++i) {
            Vec3 n = has_normal_[i] ? mesh_.normals[i] : accumulated[source_position_[i]];
            const double len = length(n);
            mesh_.normals[i] = len > 0.0 ? n / len : Vec3{0, 0, 1};
        }
        if (!any_uv_) mesh_.uvs.clear();
        return std::move(mesh_);
    }

private:
    Mesh mesh_;
    std::map<ObjVertexKey, std::uint32_t> lookup_;
    std::vector<int> source_position_;
    std::vector<bool> has_normal_;
    bool any_uv_ = false;
};

double parse_double(std::string_view token, const std::string& file, int line) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ObjParseError(file, line, "invalid number '" + std::string(token) + "'");
    }
    return value;
}

int resolve_index(std::string_view token, std::size_t count, const std::string& file, int line) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || value == 0) {
        throw ObjParseError(file, line, "invalid index '" + std::string(token) + "'");
    }
    const long long resolved = value > 0 ? value - 1 : static_cast<long long>(count) + value;
    if (resolved < 0 || resolved >= static_cast<long long>(count)) {
        throw ObjParseError(file, line, "index " + std::string(token) + " out of range");
    }
    return static_cast<int>(resolved);
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

std::vector<Mesh> parse_obj(std::string_view text, const std::string& filename) {
    std::vector<Vec3> positions;
    std::vector<Vec2> uvs;
    std::vector<Vec3> normals;
    std::vector<Mesh> meshes;
    ObjMeshBuilder current("default");

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tokens = split_ws(line);
        if (tokens.empty()) {
            if (end == text.size()) break;
            continue;
        }
        const std::string_view tag = tokens[0];
        if (tag == "v") {
            if (tokens.size() < 4) throw ObjParseError(filename, line_no, "vertex needs 3 coordinates");
            positions.push_back({parse_double(tokens[1], filename, line_no), parse_double(tokens[2], filename, line_no),
                                 parse_double(tokens[3], filename, line_no)});
        } else if (tag == "vt") {
            if (tokens.size() < 3) throw ObjParseError(filename, line_no, "texture coordinate needs 2 values");
            uvs.push_back({parse_double(tokens[1], filename, line_no), parse_double(tokens[2], filename, line_no)});
        } else if (tag == "vn") {
            if (tokens.size() < 4) throw ObjParseError(filename, line_no, "normal needs 3 components");
            normals.push_back({parse_double(tokens[1], filename, line_no), parse_double(tokens[2], filename, line_no),
                               parse_double(tokens[3], filename, line_no)});
        } else if (tag == "f") {
            if (tokens.size() < 4) throw ObjParseError(filename, line_no, "face needs at least 3 vertices");
            std::vector<ObjVertexKey> face;
            for (std::size_t i = 1; i < tokens.size(); ++i) {
                const std::string_view tok = tokens[i];
                const auto s1 = tok.find('/');
                ObjVertexKey key{-1, -1, -1};
                key.position = resolve_index(tok.substr(0, s1), positions.size(), filename, line_no);
                if (s1 != std::string_view::npos) {
                    const auto s2 = tok.find('/', s1 + 1);
                    const auto uv_tok = tok.substr(s1 + 1, s2 == std::string_view::npos ? std::string_view::npos : s2 - s1 - 1);
                    if (!uv_tok.empty()) key.uv = resolve_index(uv_tok, uvs.size(), filename, line_no);
                    if (s2 != std::string_view::npos) {
                        key.normal = resolve_index(tok.substr(s2 + 1), normals.size(), filename, line_no);
                    }
                }
                face.push_back(key);
            }
            current.add_face(face, positions, uvs, normals);
        } else if (tag == "o" || tag == "g") {
            const std::string name = tokens.size() > 1 ? std::string(tokens[1]) : std::string("default");
            if (!current.empty()) meshes.push_back(current.finish());
            current = ObjMeshBuilder(name);
        }
        // mtllib, usemtl, s and other directives carry nothing we use.
        if (end == text.size()) break;
    }
    if (!current.empty()) meshes.push_back(current.finish());
    return meshes;
}

std::vector<Mesh> load_obj(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ObjParseError(path.string(), 0, "cannot open file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_obj(buffer.str(), path.string());
}

void write_obj(const std::filesystem::path& path, const std::vector<Mesh>& meshes) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out.precision(9);
    std::size_t base = 1;
    std::size_t normal_base = 1;
    for (const Mesh& mesh : meshes) {
        const bool with_normals = !mesh.normals.empty();
        out << "o " << (mesh.name.empty() ? "mesh" : mesh.name) << "\n";
        for (const Vec3& p : mesh.positions) out << "v " << p.x << " " << p.y << " " << p.z << "\n";
        for (const Vec3& n : mesh.normals) out << "vn " << n.x << " " << n.y << " " << n.z << "\n";
        for (const auto& tri : mesh.triangles) {
            out << "f";
            for (auto idx : tri) {
                out << " " << base + idx;
                if (with_normals) out << "//" << normal_base + idx;
            }
            out << "\n";
        }
        base += mesh.positions.size();
        normal_base += mesh.normals.size();
    }
}

}  // namespace rayvr
