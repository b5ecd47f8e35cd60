#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "rayvr/accel.hpp"
#include "rayvr/graph.hpp"
#include "rayvr/scene.hpp"
#include "rayvr/tracer.hpp"

namespace rayvr {

struct SessionConfig {
    ImageSize size{256, 256};  // per eye
    bool stereo = true;
    TraceSettings settings{};
    int workers = 0;
    std::optional<double> ipd;
    /// Still-image quality for snapshot requests.
    int snapshot_spp = 16;
    /// Pause between frames so request threads get CPU time.
    std::chrono::milliseconds frame_gap{1};
};

/// One published frame. Immutable once published.
struct PublishedFrame {
    std::uint64_t frame = 0;        // publication index, starts at 1
    std::uint64_t applied_seq = 0;  // every command with seq <= this was applied before rendering
    ImageSize eye_size{};
    std::string layout;       // "mono" or "side_by_side"
    LdrImage image;           // composed frame
    std::vector<int> material_ids;  // per composed pixel, -1 where uncovered
    FrameStats stats;
};

/// Structured command error, e.g. {"code":"unknown_material","id":7}.
struct CommandError {
    nlohmann::json body;
};

/// Live tuning session: a render loop plus a command queue drained at frame
/// boundaries. Each submitted command (or array of commands) is a batch that
/// is validated as a whole and applied as a whole.
class TuningSession {
public:
    TuningSession(Scene scene, SessionConfig config);
    ~TuningSession();

    /// Scene descriptor: materials with current effects, lights, camera, quality.
    nlohmann::json descriptor() const;

    /// Validates and enqueues. Reply is {"ok":true,"seq":N,"published_frame":F} (plus "snapshot"
    /// for snapshot requests) or {"ok":false,"error":{...}}.
    nlohmann::json submit(const nlohmann::json& command);

    /// Applies pending batches, renders one frame and publishes it. Called by
    /// the loop thread, or directly when no loop runs.
    void render_once();

    void start();
    void stop();
    bool running() const { return loop_.joinable(); }

    std::shared_ptr<const PublishedFrame> latest() const;
    /// Blocks until a frame newer than `after` exists or the timeout passes.
    std::shared_ptr<const PublishedFrame> wait_for_frame(std::uint64_t after, std::chrono::milliseconds timeout) const;
    /// PNG bytes of snapshot `id` once rendered, empty on timeout.
    std::optional<std::string> wait_for_snapshot(std::uint64_t id, std::chrono::milliseconds timeout) const;

private:
    struct Batch {
        std::uint64_t seq;
        std::vector<nlohmann::json> commands;
    };

    void validate(const nlohmann::json& command) const;
    void apply(const nlohmann::json& command);
    void render_snapshot(std::uint64_t id);
    std::vector<Eye> current_eyes(ImageSize size) const;
    nlohmann::json descriptor_locked() const;

    // Scene state; mutated only by the render thread under state_mutex_.
    mutable std::mutex state_mutex_;
    Scene scene_;
    SessionConfig config_;
    Vec3 camera_position_;
    Vec3 camera_look_at_;
    double ipd_;
    Tlas tlas_;
    Renderer renderer_;

    mutable std::mutex queue_mutex_;
    std::deque<Batch> pending_;
    std::uint64_t next_seq_ = 1;
    std::uint64_t next_snapshot_ = 1;

    mutable std::mutex publish_mutex_;
    mutable std::condition_variable published_;
    std::shared_ptr<const PublishedFrame> latest_;
    std::map<std::uint64_t, std::string> snapshots_;
    std::uint64_t applied_seq_ = 0;
    std::uint64_t published_count_ = 0;

    std::thread loop_;
    std::atomic<bool> stop_{false};
};

/// Wire format of a frame message: u32 little-endian header length, JSON
/// header, RGB8 pixels row-major, then (when header "ids" is true) one
/// little-endian int32 material id per pixel.
std::string encode_frame(const PublishedFrame& frame, bool with_ids);

struct DecodedFrame {
    nlohmann::json header;
    LdrImage image;
    std::vector<int> material_ids;
};
/// Throws std::invalid_argument on malformed input.
DecodedFrame decode_frame(const std::string& bytes);

nlohmann::json frame_header(const PublishedFrame& frame, bool with_ids);

class ServiceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// HTTP front end (loopback by default):
///   GET  /api/descriptor
///   POST /api/command            body: command object or array (one batch)
///   GET  /api/frame?after=N&ids=1  long-poll, binary frame message
///   GET  /api/stats              latest FrameStats JSON
///   GET  /api/stats/stream       server-sent events, one per published frame
///   GET  /api/snapshot?id=N///   GET  /api/snapshot?id=N      PNG once the still is renderedtimeout_ms=T  PNG once the still is rendered
class TuningServer {
public:
    explicit TuningServer(TuningSession& session);
    ~TuningServer();

    /// Binds and serves on a background thread. Port 0 picks a free port.
    /// Throws ServiceError if the address cannot be bound.
    void start(const std::string& host, int port);
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

/// Parses "HOST:PORT". Throws std::invalid_argument.
std::pair<std::string, int> parse_bind(const std::string& bind);

/// Blocking `serve` entry point used by the CLI; returns an exit code.
int serve(const std::filesystem::path& scene_path, const std::string& bind, SessionConfig config, std::ostream& log,
          std::ostream& err);

}  // namespace rayvr
