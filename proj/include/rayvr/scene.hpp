#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rayvr/camera.hpp"
#include "rayvr/hit.hpp"
#include "rayvr/image.hpp"
#include "rayvr/math.hpp"

namespace rayvr {

/// Shading path selected per material. Declaration order is the cost order.
enum class EffectId : std::uint8_t { Raster, RasterShadows, Mirror, PathTraced };

inline constexpr std::array<EffectId, 4> kAllEffects = {EffectId::Raster, EffectId::RasterShadows,
                                                        EffectId::Mirror, EffectId::PathTraced};

/// "raster", "raster_shadows", "mirror", "path".
std::string_view to_string(EffectId effect);
/// Throws std::invalid_argument for unknown names.
EffectId parse_effect(std::string_view name);

inline constexpr double kAlphaThreshold = 0.5;

struct Material {
    int id = 0;
    Rgb albedo{0.8};
    Rgb specular{0.0};
    Rgb emissive{0.0};
    double alpha = 1.0;
    double shininess = 32.0;
    EffectId effect = EffectId::Raster;

    /// Binary alpha test used by closest-hit, any-hit and rasterization.
    bool opaque() const { return alpha >= kAlphaThreshold; }
};

struct Mesh {
    std::string name;
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;
    std::vector<Vec2> uvs;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    Aabb bounds() const;
    /// Throws std::invalid_argument on out-of-range indices or size mismatches.
    void validate() const;
};

struct Instance {
    std::uint32_t mesh = 0;
    int material_id = 0;
    Mat4 transform = Mat4::identity();

    // Filled by Scene::finalize().
    Mat4 inverse_transform = Mat4::identity();
    Mat4 normal_matrix = Mat4::identity();
    std::uint32_t material_index = 0;
};

struct Light {
    enum class Kind { Point, Directional };
    Kind kind = Kind::Point;
    Vec3 position{};
    /// Direction the light travels (directional lights only).
    Vec3 direction{0, -1, 0};
    /// Radiant intensity for point lights, irradiance for directional ones.
    Rgb intensity{1.0};

    static Light point(const Vec3& position, const Rgb& intensity);
    static Light directional(const Vec3& direction, const Rgb& intensity);
};

/// Constant radiance or an equirectangular (lat-long) map sampled bilinearly.
/// Image u = atan2(d.x, -d.z) / 2pi + 1/2, v = acos(d.y) / pi.
class Environment {
public:
    Environment() = default;
    static Environment constant(const Rgb& radiance);
    static Environment from_image(std::shared_ptr<const HdrImage> image, std::string source = {});

    Rgb lookup(const Vec3& direction) const;

    bool is_constant() const { return image_ == nullptr; }
    const Rgb& constant_radiance() const { return constant_; }
    const std::string& source() const { return source_; }

private:
    Rgb constant_{0.0};
    std::shared_ptr<const HdrImage> image_;
    std::string source_;
};

struct CameraDefaults {
    Vec3 position{0, 1, 5};
    Vec3 look_at{0, 1, 0};
    Vec3 up{0, 1, 0};
    double fov_y_deg = 60.0;
    double ipd = 0.064;

    Pose pose() const { return Pose::look_at(position, look_at, up); }
};

class SceneError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Scene {
public:
    std::vector<Mesh> meshes;
    /// OBJ path of each mesh as written in the scene file (empty for in-memory meshes).
    std::vector<std::string> mesh_sources;
    std::vector<Instance> instances;
    std::vector<Light> lights;
    std::vector<Material> materials;
    Environment environment;
    CameraDefaults camera;

    /// Validates references and caches per-instance matrices and material
    /// indices. Must be called after structural edits. Throws SceneError.
    void finalize();

    const Material* find_material(int id) const;
    const Material& material_at(std::uint32_t index) const { return materials[index]; }
    std::uint32_t material_index(int id) const;

    Aabb bounds() const { return bounds_; }
    /// Length of the bounding-box diagonal (1 for empty scenes).
    double scale() const { return scale_; }
    /// Offset used for secondary-ray t_min: 1e-4 * scale().
    double ray_epsilon() const { return 1e-4 * scale_; }
    std::size_t triangle_count() const;

    /// Bumped whenever material dispatch changes; used to invalidate accumulation.
    std::uint64_t revision() const { return revision_; }
    void bump_revision() { ++revision_; }

private:
    std::unordered_map<int, std::uint32_t> material_lookup_;
    Aabb bounds_;
    double scale_ = 1.0;
    std::uint64_t revision_ = 0;
};

class ObjParseError : public std::runtime_error {
public:
    ObjParseError(const std::string& file, int line, const std::string& what);
    int line() const { return line_; }

private:
    int line_;
};

/// Wavefront OBJ reader: v/vt/vn/f with negative indices, polygon faces fan
/// triangulated, one mesh per `o`/`g` group. Missing normals become
/// area-weighted vertex normals.
std::vector<Mesh> load_obj(const std::filesystem::path& path);
std::vector<Mesh> parse_obj(std::string_view text, const std::string& filename = "<memory>");
void write_obj(const std::filesystem::path& path, const std::vector<Mesh>& meshes);

/// Loads a scene JSON file; relative OBJ and image paths resolve against its directory.
Scene load_scene(const std::filesystem::path& path);

/// Changes a material's effect. Returns true if the effect changed (and the
/// scene revision advanced). Throws SceneError naming the id if unknown.
bool set_material_effect(Scene& scene, int material_id, EffectId effect);

/// Forces every material to `effect`.
void override_all_effects(Scene& scene, EffectId effect);

/// Incident direction toward the light and its unshadowed irradiance at `p`.
struct LightSample {
    Vec3 wi{};
    double distance = 0.0;  // infinity for directional lights
    Rgb irradiance{};
};
LightSample sample_light(const Light& light, const Vec3& p);

/// Lambert + normalized Blinn-Phong for one light, without visibility.
Rgb eval_material(const Hit& hit, const Light& light, const Scene& scene);

/// Resolves the surface attributes of (instance, triangle, u, v) seen along `direction`.
Hit resolve_hit(const Scene& scene, std::uint32_t instance, std::uint32_t triangle, double u, double v,
                double t, const Vec3& direction);

}  // namespace rayvr
