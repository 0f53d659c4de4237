#include "ellopt/worker_pool.hpp"

#include <map>
#include <memory>
#include <stdexcept>
#include <utility>

namespace ellopt {

WorkerPool::WorkerPool(std::size_t workers) {
    if (workers == 0) {
        throw std::invalid_argument("WorkerPool: worker count must be positive");
    }
    threads_.reserve(workers - 1);
    for (std::size_t i = 1; i < workers; ++i) {
        threads_.emplace_back([this] { worker_loop(); });
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) {
        t.join();
    }
}

void WorkerPool::drain() {
    std::unique_lock lock(mutex_);
    while (next_ < count_) {
        const std::size_t i = next_++;
        ++active_;
        lock.unlock();
        try {
            (*task_)(i);
        } catch (...) {
            lock.lock();
            if (!error_) {
                error_ = std::current_exception();
            }
            next_ = count_;
            --active_;
            continue;
        }
        lock.lock();
        --active_;
    }
    if (active_ == 0) {
        done_.notify_all();
    }
}

void WorkerPool::worker_loop() {
    std::size_t seen = 0;
    for (;;) {
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) {
                return;
            }
            seen = generation_;
        }
        drain();
    }
}

void WorkerPool::run(std::size_t count, const std::function<void(std::size_t)>& task) {
    if (count == 0) {
        return;
    }
    if (threads_.empty() || count == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }
    std::lock_guard run_lock(run_mutex_);
    {
        std::lock_guard lock(mutex_);
        task_ = &task;
        count_ = count;
        next_ = 0;
        active_ = 0;
        error_ = nullptr;
        ++generation_;
    }
    wake_.notify_all();
    drain();
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return next_ >= count_ && active_ == 0; });
    task_ = nullptr;
    if (error_) {
        std::rethrow_exception(std::exchange(error_, nullptr));
    }
}

WorkerPool& WorkerPool::shared(std::size_t workers) {
    static std::mutex registry_mutex;
    static std::map<std::size_t, std::unique_ptr<WorkerPool>> registry;
    std::lock_guard lock(registry_mutex);
    auto& slot = registry[workers];
    if (!slot) {
        slot = std::make_unique<WorkerPool>(workers);
    }
    return *slot;
}

}  // namespace ellopt
