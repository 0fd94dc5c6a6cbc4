#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace membrane {

/// Name of the environment variable selecting the worker count.
inline constexpr const char* kWorkersEnv = "MEMBRANE_LAB_WORKERS";

/// Worker count from the environment (default 1, clamped to [1, 256]).
int configured_workers();

/// Fixed pool that runs indexed chunks. Chunk c always lands on worker
/// c % workers, and callers write results into chunk-indexed slots, so the
/// combined result never depends on the worker count.
class WorkerPool {
 public:
  explicit WorkerPool(int workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int workers() const { return workers_; }
  void run(int chunks, const std::function<void(int)>& fn);

 private:
  void loop(int id);

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable start_cv_, done_cv_;
  const std::function<void(int)>* job_ = nullptr;
  int chunks_ = 0;
  long generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

}  // namespace membrane
