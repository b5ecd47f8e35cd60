#pragma once

#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "rayvr/camera.hpp"

namespace rayvr {

/// Persistent thread pool. run() hands out task indices through an atomic
/// counter; the calling thread works too, so workers == 1 runs inline.
/// Results must not depend on which thread ran a task.
class WorkerPool {
public:
    /// workers <= 0 picks std::thread::hardware_concurrency().
    explicit WorkerPool(int workers = 1);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    int size() const { return static_cast<int>(threads_.size()) + 1; }

    /// Calls fn(i) for every i in [0, count) and blocks until all finish.
    /// The first exception thrown by a task is rethrown here.
    void run(int count, const std::function<void(int)>& fn);

private:
    void worker_loop();
    void drain();

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(int)>* job_ = nullptr;
    int job_count_ = 0;
    int next_ = 0;
    int active_ = 0;
    unsigned long generation_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
};

inline constexpr int kTileSize = 16;

struct Tile {
    int x0, y0, x1, y1;  // half-open pixel bounds
};

int tile_count(ImageSize size);
Tile tile_at(ImageSize size, int index);

}  // namespace rayvr
