#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ellopt {

/// Fixed set of threads that execute index-addressed tasks. The caller thread
/// takes part in every run, so a pool of size 1 owns no threads at all.
class WorkerPool {
  public:
    explicit WorkerPool(std::size_t workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    std::size_t size() const { return threads_.size() + 1; }

    /// Calls task(i) once for every i in [0, count) and returns when all are
    /// done. The first exception thrown by a task is rethrown here.
    void run(std::size_t count, const std::function<void(std::size_t)>& task);

    /// Process-wide pool with the given worker count, created on first use.
    static WorkerPool& shared(std::size_t workers);

  private:
    void worker_loop();
    void drain();

    std::vector<std::thread> threads_;
    std::mutex run_mutex_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t)>* task_ = nullptr;
    std::size_t count_ = 0;
    std::size_t next_ = 0;
    std::size_t active_ = 0;
    std::size_t generation_ = 0;
    std::exception_ptr error_;
    bool stop_ = false;
};

}  // namespace ellopt
