#pragma once
// Scripted HTTP client for the live tuning loop.

#include <optional>
#include <string>

#include "fixtures.hpp"
#include "httplib.h"
#include "rayvr/service.hpp"

namespace checks {

using namespace rayvr;

// --- live tuning loop ----------------------------------------------------------

struct LiveLoop {
    bool connected = false;
    bool acknowledged = false;
    int frames_until_visible = -1;  // published frames after the ack until the change shows
    long long changed_pixels = 0;
    long long changed_outside_material = 0;
    std::uint64_t rays_before = 0;
    std::uint64_t rays_after = 0;
    std::string error;
};

// Scene for the loop: cornell with path-traced materials pinned to
// RasterShadows, so every frame is noise free and any pixel change is caused
// by the command under test. The glossy block (material kLiveMaterial) starts
// as plain Raster.
inline constexpr int kLiveMaterial = 5;

inline Scene live_loop_scene() {
    Scene scene = load_scene(fixture::scene_path("cornell"));
    for (Material& m : scene.materials) {
        if (m.effect == EffectId::PathTraced) m.effect = EffectId::RasterShadows;
    }
    set_material_effect(scene, kLiveMaterial, EffectId::Raster);
    return scene;
}

inline LiveLoop live_loop(int flip_material = kLiveMaterial) {
    LiveLoop r;
    SessionConfig config;
    config.size = {96, 96};
    config.stereo = true;
    config.workers = 0;
    TuningSession session(live_loop_scene(), config);
    TuningServer server(session);
    server.start("127.0.0.1", 0);
    session.start();

    httplib::Client client("127.0.0.1", server.port());
    client.set_read_timeout(std::chrono::seconds(30));
    const auto desc = client.Get("/api/descriptor");
    if (!desc || desc->status != 200) {
        r.error = "descriptor request failed";
        return r;
    }
    r.connected = true;

    auto fetch = [&](std::uint64_t after) -> std::optional<DecodedFrame> {
        auto res = client.Get("/api/frame?ids=1&timeout_ms=20000&after=" + std::to_string(after));
        if (!res || res->status != 200) return std::nullopt;
        return decode_frame(res->body);
    };
    const auto before = fetch(0);
    if (!before) {
        r.error = "no initial frame";
        return r;
    }
    r.rays_before = before->header["stats"]["rays"]["total"].get<std::uint64_t>();

    const nlohmann::json cmd{{"type", "set_effect"}, {"material_id", flip_material}, {"effect", "mirror"}};
    const auto ack = client.Post("/api/command", cmd.dump(), "application/json");
    if (!ack || ack->status != 200) {
        r.error = "command rejected";
        return r;
    }
    const auto reply = nlohmann::json::parse(ack->body);
    r.acknowledged = reply.value("ok", false);
    const std::uint64_t seq = reply["seq"].get<std::uint64_t>();
    const std::uint64_t ack_frame = reply["published_frame"].get<std::uint64_t>();

    std::uint64_t seen = ack_frame;
    std::optional<DecodedFrame> after;
    for (int tries = 0; tries < 10; ++tries) {
        auto f = fetch(seen);
        if (!f) break;
        seen = f->header["frame"].get<std::uint64_t>();
        if (f->header["applied_seq"].get<std::uint64_t>() >= seq) {
            after = std::move(f);
            break;
        }
    }
    session.stop();
    server.stop();
    if (!after) {
        r.error = "change never published";
        return r;
    }
    r.frames_until_visible = static_cast<int>(seen - ack_frame);
    r.rays_after = after->header["stats"]["rays"]["total"].get<std::uint64_t>();
    for (std::size_t i = 0; i < after->image.pixels.size(); ++i) {
        if (after->image.pixels[i] == before->image.pixels[i]) continue;
        ++r.changed_pixels;
        if (before->material_ids[i] != flip_material) ++r.changed_outside_material;
    }
    return r;
}

}  // namespace checks
