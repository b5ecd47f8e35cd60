#include "rayvr/parallel.hpp"

#include <algorithm>

namespace rayvr {

WorkerPool::WorkerPool(int workers) {
    if (workers <= 0) workers = std::max(1u, std::thread::hardware_concurrency());
    for (int i = 1; i < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
}

// Pulls task indices until the job is exhausted. Caller holds no lock.
void WorkerPool::drain() {
    for (;;) {
        int index;
        const std::function<void(int)>* job;
        {
            std::lock_guard lock(mutex_);
            if (next_ >= job_count_) return;
            index = next_++;
            job = job_;
        }
        try {
            (*job)(index);
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_) error_ = std::current_exception();
            next_ = job_count_;  // abandon remaining tasks
        }
    }
}

void WorkerPool::worker_loop() {
    unsigned long seen = 0;
    for (;;) {
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            ++active_;
        }
        drain();
        {
            std::lock_guard lock(mutex_);
            --active_;
        }
        done_.notify_all();
    }
}

void WorkerPool::run(int count, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    if (threads_.empty()) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    {
        std::lock_guard lock(mutex_);
        job_ = &fn;
        job_count_ = count;
        next_ = 0;
        error_ = nullptr;
        ++generation_;
    }
    wake_.notify_all();
    drain();
    std::exception_ptr error;
    {
        std::unique_lock lock(mutex_);
        done_.wait(lock, [&] { return active_ == 0 && next_ >= job_count_; });
        job_ = nullptr;
        job_count_ = 0;
        error = error_;
        error_ = nullptr;
    }
    if (error) std::rethrow_exception(error);
}

int tile_count(ImageSize size) {
    const int tx = (size.width + kTileSize - 1) / kTileSize;
    const int ty = (size.height + kTileSize - 1) / kTileSize;
    return tx * ty;
}

Tile tile_at(ImageSize size, int index) {
    const int tx = (size.width + kTileSize - 1) / kTileSize;
    const int x0 = (index % tx) * kTileSize;
    const int y0 = (index / tx) * kTileSize;
    return {x0, y0, std::min(x0 + kTileSize, size.width), std::min(y0 + kTileSize, size.height)};
}

}  // namespace rayvr
