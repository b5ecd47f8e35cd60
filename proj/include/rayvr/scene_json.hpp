#pragma once

#include <filesystem>

#include "json.hpp"
#include "rayvr/scene.hpp"

namespace rayvr {

Scene scene_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Normalized JSON form: every optional field written out, mesh paths as given.
nlohmann::json scene_to_json(const Scene& scene);

nlohmann::json to_json(const Vec3& v);
nlohmann::json to_json(const Rgb& c);
nlohmann::json material_to_json(const Material& m);
nlohmann::json light_to_json(const Light& l);

}  // namespace rayvr
