#include "rayvr/service.hpp"

#include <csignal>
#include <cstring>
#include <iostream>

#include "httplib.h"
#include "rayvr/bench.hpp"
#include "rayvr/scene_json.hpp"

namespace rayvr {

using nlohmann::json;

namespace {

json error_body(std::string code, json extra = json::object()) {
    extra["code"] = std::move(code);
    return extra;
}

[[noreturn]] void reject(std::string code, json extra = json::object()) {
    throw CommandError{error_body(std::move(code), std::move(extra))};
}

Vec3 field_vec3(const json& cmd, const char* field) {
    const json& v = cmd.at(field);
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
        reject("invalid_field", {{"field", field}, {"message", "expected [x, y, z]"}});
    }
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

ImageSize field_size(const json& v) {
    if (v.is_string()) {
        try {
            return parse_size(v.get<std::string>());
        } catch (const std::invalid_argument&) {
        }
    } else if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer()) {
        const ImageSize s{v[0].get<int>(), v[1].get<int>()};
        if (s.width > 0 && s.height > 0) return s;
    }
    reject("invalid_field", {{"field", "size"}, {"message", "expected \"WxH\" or [w, h] with positive sizes"}});
}

int field_positive_int(const json& cmd, const char* field, int lo) {
    const json& v = cmd.at(field);
    if (!v.is_number_integer() || v.get<long long>() < lo || v.get<long long>() > 1 << 20) {
        reject("invalid_field", {{"field", field}, {"message", "expected an integer >= " + std::to_string(lo)}});
    }
    return v.get<int>();
}

constexpr int kMaxSide = 4096;

}  // namespace

TuningSession::TuningSession(Scene scene, SessionConfig config)
    : scene_(std::move(scene)),
      config_(config),
      camera_position_(scene_.camera.position),
      camera_look_at_(scene_.camera.look_at),
      ipd_(config.ipd.value_or(scene_.camera.ipd)),
      tlas_(build_accel(scene_)),
      renderer_(config.workers) {
    config_.settings.validate();
}

TuningSession::~TuningSession() { stop(); }

json TuningSession::descriptor_locked() const {
    json materials = json::array();
    for (const Material& m : scene_.materials) materials.push_back(material_to_json(m));
    json lights = json::array();
    for (const Light& l : scene_.lights) lights.push_back(light_to_json(l));
    return {{"materials", materials},
            {"lights", lights},
            {"camera",
             {{"position", to_json(camera_position_)},
              {"look_at", to_json(camera_look_at_)},
              {"up", to_json(scene_.camera.up)},
              {"fov_y_deg", scene_.camera.fov_y_deg},
              {"ipd", ipd_}}},
            {"quality",
             {{"size", {config_.size.width, config_.size.height}},
              {"spp", config_.settings.spp},
              {"max_depth", config_.settings.max_depth}}},
            {"raygen_mode", std::string(to_string(config_.settings.raygen_mode))},
            {"layout", config_.stereo ? "side_by_side" : "mono"},
            {"effects", {"raster", "raster_shadows", "mirror", "path"}}};
}

json TuningSession::descriptor() const {
    json d;
    {
        std::lock_guard lock(state_mutex_);
        d = descriptor_locked();
    }
    std::lock_guard lock(publish_mutex_);
    d["frame"] = latest_ ? latest_->frame : 0;
    d["applied_seq"] = applied_seq_;
    return d;
}

void TuningSession::validate(const json& cmd) const {
    if (!cmd.is_object()) reject("invalid_command", {{"message", "command must be an object"}});
    if (!cmd.contains("type") || !cmd["type"].is_string()) reject("missing_field", {{"field", "type"}});
    const std::string type = cmd["type"].get<std::string>();
    auto require = [&](const char* field) {
        if (!cmd.contains(field)) reject("missing_field", {{"field", field}});
    };
    if (type == "set_effect") {
        require("material_id");
        require("effect");
        if (!cmd["material_id"].is_number_integer()) {
            reject("invalid_field", {{"field", "material_id"}, {"message", "expected an integer"}});
        }
        const int id = cmd["material_id"].get<int>();
        // Material ids never change after load, so checking without the state lock is safe.
        if (!scene_.find_material(id)) reject("unknown_material", {{"id", id}, {"field", "material_id"}});
        try {
            parse_effect(cmd["effect"].is_string() ? cmd["effect"].get<std::string>() : std::string());
        } catch (const std::invalid_argument&) {
            reject("invalid_effect", {{"field", "effect"}, {"value", cmd["effect"]}});
        }
    } else if (type == "set_mode") {
        require("raygen_mode");
        try {
            parse_raygen_mode(cmd["raygen_mode"].is_string() ? cmd["raygen_mode"].get<std::string>() : std::string());
        } catch (const std::invalid_argument&) {
            reject("invalid_mode", {{"field", "raygen_mode"}, {"value", cmd["raygen_mode"]}});
        }
    } else if (type == "set_camera") {
        require("position");
        require("look_at");
        const Vec3 p = field_vec3(cmd, "position");
        const Vec3 t = field_vec3(cmd, "look_at");
        if (!(length(t - p) > 0.0)) reject("invalid_camera", {{"field", "look_at"}, {"message", "look_at equals position"}});
        try {
            (void)Pose::look_at(p, t, scene_.camera.up).right();
        } catch (const std::invalid_argument&) {
            reject("invalid_camera", {{"field", "look_at"}, {"message", "view direction parallel to up"}});
        }
        if (cmd.contains("ipd") && (!cmd["ipd"].is_number() || cmd["ipd"].get<double>() < 0.0)) {
            reject("invalid_field", {{"field", "ipd"}, {"message", "expected a number >= 0"}});
        }
    } else if (type == "set_quality") {
        if (cmd.contains("size")) {
            const ImageSize s = field_size(cmd["size"]);
            if (s.width > kMaxSide || s.height > kMaxSide) {
                reject("invalid_field", {{"field", "size"}, {"message", "at most 4096 per side"}});
            }
        }
        if (cmd.contains("spp")) field_positive_int(cmd, "spp", 1);
        if (cmd.contains("max_depth")) field_positive_int(cmd, "max_depth", 1);
    } else if (type == "snapshot") {
    } else {
        reject("unknown_command", {{"type", type}});
    }
}

json TuningSession::submit(const json& command) {
    std::vector<json> batch;
    if (command.is_array()) {
        batch.assign(command.begin(), command.end());
    } else {
        batch.push_back(command);
    }
    if (batch.empty()) return {{"ok", false}, {"error", error_body("invalid_command", {{"message", "empty batch"}})}};
    for (json& cmd : batch) {
        // short alias
        if (cmd.is_object() && cmd.contains("material") && !cmd.contains("material_id")) {
            cmd["material_id"] = cmd["material"];
            cmd.erase("material");
        }
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        try {
            validate(batch[i]);
        } catch (const CommandError& e) {
            json body = e.body;
            if (batch.size() > 1) body["index"] = i;
            return {{"ok", false}, {"error", body}};
        }
    }
    std::lock_guard lock(queue_mutex_);
    json reply{{"ok", true}};
    json snapshots = json::array();
    for (json& cmd : batch) {
        if (cmd["type"] == "snapshot") {
            cmd["snapshot_id"] = next_snapshot_;
            snapshots.push_back(next_snapshot_++);
        }
    }
    const std::uint64_t seq = next_seq_++;
    pending_.push_back({seq, std::move(batch)});
    reply["seq"] = seq;
    {
        std::lock_guard publish_lock(publish_mutex_);
        reply["published_frame"] = latest_ ? latest_->frame : 0;
    }
    if (snapshots.size() == 1) reply["snapshot"] = snapshots[0];
    else if (!snapshots.empty()) reply["snapshot"] = snapshots;
    return reply;
}

void TuningSession::apply(const json& cmd) {
    const std::string type = cmd["type"].get<std::string>();
    if (type == "set_effect") {
        set_material_effect(scene_, cmd["material_id"].get<int>(), parse_effect(cmd["effect"].get<std::string>()));
    } else if (type == "set_mode") {
        config_.settings.raygen_mode = parse_raygen_mode(cmd["raygen_mode"].get<std::string>());
    } else if (type == "set_camera") {
        camera_position_ = field_vec3(cmd, "position");
        camera_look_at_ = field_vec3(cmd, "look_at");
        if (cmd.contains("ipd")) ipd_ = cmd["ipd"].get<double>();
    } else if (type == "set_quality") {
        if (cmd.contains("size")) config_.size = field_size(cmd["size"]);
        if (cmd.contains("spp")) config_.settings.spp = cmd["spp"].get<int>();
        if (cmd.contains("max_depth")) config_.settings.max_depth = cmd["max_depth"].get<int>();
    }
}

std::vector<Eye> TuningSession::current_eyes(ImageSize size) const {
    ProjectionParams p = scene_projection(scene_, size);
    const Pose pose = Pose::look_at(camera_position_, camera_look_at_, scene_.camera.up);
    if (!config_.stereo) return {make_eye(pose, p)};
    const StereoRig rig = make_stereo_rig(pose, ipd_, p);
    return {rig.left, rig.right};
}

namespace {

std::vector<int> material_id_map(const std::vector<GBuffer>& gbuffers) {
    if (gbuffers.empty()) return {};
    const int w = gbuffers[0].size.width;
    const int h = gbuffers[0].size.height;
    const int n = static_cast<int>(gbuffers.size());
    std::vector<int> ids(static_cast<std::size_t>(w) * n * h, -1);
    for (int e = 0; e < n; ++e) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t src = gbuffers[e].index(x, y);
                if (gbuffers[e].coverage[src]) {
                    ids[static_cast<std::size_t>(y) * w * n + e * w + x] = gbuffers[e].material_id[src];
                }
            }
        }
    }
    return ids;
}

}  // namespace

void TuningSession::render_snapshot(std::uint64_t id) {
    TraceSettings still = config_.settings;
    still.spp = std::max(still.spp, config_.snapshot_spp);
    Renderer r(config_.workers);
    const auto eyes = current_eyes(config_.size);
    const FrameOutput out = r.render_frame(scene_, tlas_, eyes, config_.size, still, build_graph(still, scene_));
    std::string png = encode_png(out.composed);
    {
        std::lock_guard lock(publish_mutex_);
        snapshots_[id] = std::move(png);
    }
    published_.notify_all();
}

void TuningSession::render_once() {
    std::deque<Batch> batches;
    {
        std::lock_guard lock(queue_mutex_);
        batches.swap(pending_);
    }
    std::uint64_t applied = 0;
    std::vector<std::uint64_t> snapshot_ids;
    auto frame = std::make_shared<PublishedFrame>();
    {
        std::lock_guard lock(state_mutex_);
        for (const Batch& b : batches) {
            for (const json& cmd : b.commands) {
                apply(cmd);
                if (cmd["type"] == "snapshot") snapshot_ids.push_back(cmd["snapshot_id"].get<std::uint64_t>());
            }
            applied = b.seq;
        }
    }
    // Only this thread mutates the scene, so rendering without the lock is safe.
    for (std::uint64_t id : snapshot_ids) render_snapshot(id);

    const auto eyes = current_eyes(config_.size);
    const FrameOutput out =
        renderer_.render_frame(scene_, tlas_, eyes, config_.size, config_.settings, build_graph(config_.settings, scene_));
    frame->eye_size = config_.size;
    frame->layout = eyes.size() == 2 ? "side_by_side" : "mono";
    frame->image = out.composed;
    frame->stats = out.stats;
    if (!out.gbuffers.empty()) {
        frame->material_ids = material_id_map(out.gbuffers);
    } else {
        std::vector<GBuffer> gbs;
        for (const Eye& e : eyes) gbs.push_back(rasterize_gbuffer(scene_, e, config_.size, &renderer_.pool()));
        frame->material_ids = material_id_map(gbs);
    }
    {
        std::lock_guard lock(publish_mutex_);
        if (applied) applied_seq_ = applied;
        frame->applied_seq = applied_seq_;
        frame->frame = ++published_count_;
        latest_ = std::move(frame);
    }
    published_.notify_all();
}

void TuningSession::start() {
    if (loop_.joinable()) return;
    stop_ = false;
    loop_ = std::thread([this] {
        while (!stop_) {
            try {
                render_once();
            } catch (const std::exception& e) {
                std::cerr << "render loop: " << e.what() << "\n";
            }
            std::this_thread::sleep_for(config_.frame_gap);
        }
    });
}

void TuningSession::stop() {
    stop_ = true;
    if (loop_.joinable()) loop_.join();
}

std::shared_ptr<const PublishedFrame> TuningSession::latest() const {
    std::lock_guard lock(publish_mutex_);
    return latest_;
}

std::shared_ptr<const PublishedFrame> TuningSession::wait_for_frame(std::uint64_t after,
                                                                    std::chrono::milliseconds timeout) const {
    std::unique_lock lock(publish_mutex_);
    published_.wait_for(lock, timeout, [&] { return latest_ && latest_->frame > after; });
    if (latest_ && latest_->frame > after) return latest_;
    return nullptr;
}

std::optional<std::string> TuningSession::wait_for_snapshot(std::uint64_t id, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(publish_mutex_);
    published_.wait_for(lock, timeout, [&] { return snapshots_.count(id) > 0; });
    auto it = snapshots_.find(id);
    if (it == snapshots_.end()) return std::nullopt;
    return it->second;
}

json frame_header(const PublishedFrame& f, bool with_ids) {
    return {{"frame", f.frame},
            {"applied_seq", f.applied_seq},
            {"width", f.image.width},
            {"height", f.image.height},
            {"eye_width", f.eye_size.width},
            {"eye_height", f.eye_size.height},
            {"layout", f.layout},
            {"format", "rgb8"},
            {"ids", with_ids && !f.material_ids.empty()},
            {"stats", stats_to_json(f.stats)}};
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

}  // namespace

std::string encode_frame(const PublishedFrame& f, bool with_ids) {
    const json header = frame_header(f, with_ids);
    const std::string text = header.dump();
    std::string out;
    const std::size_t pixels = f.image.pixels.size();
    out.reserve(4 + text.size() + pixels * 3 + (header["ids"].get<bool>() ? pixels * 4 : 0));
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out += text;
    for (const Rgb8& p : f.image.pixels) out.append(reinterpret_cast<const char*>(p.data()), 3);
    if (header["ids"].get<bool>()) {
        for (int id : f.material_ids) put_u32(out, static_cast<std::uint32_t>(id));
    }
    return out;
}

DecodedFrame decode_frame(const std::string& bytes) {
    if (bytes.size() < 4) throw std::invalid_argument("frame: truncated length prefix");
    const std::uint32_t len = get_u32(bytes, 0);
    if (bytes.size() < 4ull + len) throw std::invalid_argument("frame: truncated header");
    DecodedFrame d;
    try {
        d.header = json::parse(bytes.substr(4, len));
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("frame: bad header: ") + e.what());
    }
    const int w = d.header.value("width", 0);
    const int h = d.header.value("height", 0);
    if (w <= 0 || h <= 0) throw std::invalid_argument("frame: bad dimensions");
    const std::size_t pixels = static_cast<std::size_t>(w) * h;
    const bool ids = d.header.value("ids", false);
    const std::size_t expected = 4 + len + pixels * 3 + (ids ? pixels * 4 : 0);
    if (bytes.size() != expected) throw std::invalid_argument("frame: payload size mismatch");
    d.image = LdrImage(w, h);
    std::size_t at = 4 + len;
    for (Rgb8& p : d.image.pixels) {
        std::memcpy(p.data(), bytes.data() + at, 3);
        at += 3;
    }
    if (ids) {
        d.material_ids.resize(pixels);
        for (int& id : d.material_ids) {
            id = static_cast<int>(get_u32(bytes, at));
            at += 4;
        }
    }
    return d;
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos || colon == 0) throw std::invalid_argument("bind must look like HOST:PORT");
    int port = -1;
    try {
        std::size_t used = 0;
        port = std::stoi(bind.substr(colon + 1), &used);
        if (used != bind.size() - colon - 1) port = -1;
    } catch (const std::exception&) {
        port = -1;
    }
    if (port < 0 || port > 65535) throw std::invalid_argument("bind port must be in [0, 65535]");
    return {bind.substr(0, colon), port};
}

struct TuningServer::Impl {
    TuningSession& session;
    httplib::Server server;
    std::thread thread;
    std::atomic<bool> closing{false};

    explicit Impl(TuningSession& s) : session(s) {}
};

TuningServer::TuningServer(TuningSession& session) : impl_(std::make_unique<Impl>(session)) {
    auto& srv = impl_->server;
    Impl* impl = impl_.get();
    // httplib's default adds SO_REUSEPORT, which would let two servers share a port.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });

    srv.Get("/api/descriptor", [impl](const httplib::Request&, httplib::Response& res) {
        res.set_content(impl->session.descriptor().dump(), "application/json");
    });

    srv.Post("/api/command", [impl](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            res.status = 400;
            res.set_content(json{{"ok", false}, {"error", error_body("malformed_json")}}.dump(), "application/json");
            return;
        }
        const json reply = impl->session.submit(body);
        if (!reply["ok"].get<bool>()) res.status = 400;
        res.set_content(reply.dump(), "application/json");
    });

    srv.Get("/api/frame", [impl](const httplib::Request& req, httplib::Response& res) {
        std::uint64_t after = 0;
        if (req.has_param("after")) after = std::stoull(req.get_param_value("after"));
        const bool ids = req.has_param("ids") && req.get_param_value("ids") == "1";
        int timeout_ms = 5000;
        if (req.has_param("timeout_ms")) timeout_ms = std::clamp(std::stoi(req.get_param_value("timeout_ms")), 0, 60000);
        auto frame = impl->session.wait_for_frame(after, std::chrono::milliseconds(timeout_ms));
        if (!frame) {
            res.status = 204;
            return;
        }
        res.set_content(encode_frame(*frame, ids), "application/octet-stream");
    });

    srv.Get("/api/stats", [impl](const httplib::Request&, httplib::Response& res) {
        auto frame = impl->session.latest();
        if (!frame) {
            res.status = 204;
            return;
        }
        json s = stats_to_json(frame->stats);
        s["published_frame"] = frame->frame;
        s["applied_seq"] = frame->applied_seq;
        res.set_content(s.dump(), "application/json");
    });

    srv.Get("/api/stats/stream", [impl](const httplib::Request&, httplib::Response& res) {
        auto last = std::make_shared<std::uint64_t>(0);
        res.set_chunked_content_provider("text/event-stream", [impl, last](std::size_t, httplib::DataSink& sink) {
            if (impl->closing) return false;
            // Skips to the newest frame, so a slow reader drops frames instead of stalling rendering.
            auto frame = impl->session.wait_for_frame(*last, std::chrono::milliseconds(500));
            if (!frame) return !impl->closing.load();
            *last = frame->frame;
            json s = stats_to_json(frame->stats);
            s["published_frame"] = frame->frame;
            s["applied_seq"] = frame->applied_seq;
            const std::string msg = "data: " + s.dump() + "\n\n";
            return sink.write(msg.data(), msg.size());
        });
    });

    srv.Get("/api/snapshot", [impl](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("id")) {
            res.status = 400;
            res.set_content(json{{"ok", false}, {"error", error_body("missing_field", {{"field", "id"}})}}.dump(),
                            "application/json");
            return;
        }
        int timeout_ms = 30000;
        if (req.has_param("timeout_ms")) timeout_ms = std::clamp(std::stoi(req.get_param_value("timeout_ms")), 0, 60000);
        const auto png =
            impl->session.wait_for_snapshot(std::stoull(req.get_param_value("id")), std::chrono::milliseconds(timeout_ms));
        if (!png) {
            res.status = 404;
            return;
        }
        res.set_content(*png, "image/png");
    });

    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        res.status = 400;
        res.set_content(json{{"ok", false}, {"error", error_body("bad_request", {{"message", what}})}}.dump(),
                        "application/json");
    });
}

TuningServer::~TuningServer() { stop(); }

void TuningServer::start(const std::string& host, int port) {
    auto& srv = impl_->server;
    if (port == 0) {
        port_ = srv.bind_to_any_port(host);
        if (port_ < 0) throw ServiceError("cannot bind " + host);
    } else {
        if (!srv.bind_to_port(host, port)) throw ServiceError("cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    // stop() before the listener is running would be ignored
    srv.wait_until_ready();
}

void TuningServer::stop() {
    if (!impl_) return;
    impl_->closing = true;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

}  // namespace

int serve(const std::filesystem::path& scene_path, const std::string& bind, SessionConfig config, std::ostream& log,
          std::ostream& err) {
    try {
        const auto [host, port] = parse_bind(bind);
        TuningSession session(load_scene(scene_path), config);
        TuningServer server(session);
        server.start(host, port);
        session.start();
        log << "serving " << scene_path.string() << " on http://" << host << ":" << server.port() << "\n" << std::flush;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        session.stop();
        server.stop();
        return 0;
    } catch (const std::exception& e) {
        err << "serve: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace rayvr
