#include "membrane/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace membrane {

int configured_workers() {
  const char* raw = std::getenv(kWorkersEnv);
  if (raw == nullptr || *raw == '\0') return 1;
  try {
    return std::clamp(std::stoi(raw), 1, 256);
  } catch (const std::exception&) {
    return 1;
  }
}

WorkerPool::WorkerPool(int workers) : workers_(std::max(1, workers)) {
  for (int id = 1; id < workers_; ++id) threads_.emplace_back([this, id] { loop(id); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::loop(int id) {
  long seen = 0;
  for (;;) {
    const std::function<void(int)>* job = nullptr;
    int chunks = 0;
    {
      std::unique_lock<std::mutex> lock(mu_);
      start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
      chunks = chunks_;
    }
    for (int c = id; c < chunks; c += workers_) (*job)(c);
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }
}

void WorkerPool::run(int chunks, const std::function<void(int)>& fn) {
  if (workers_ == 1) {
    for (int c = 0; c < chunks; ++c) fn(c);
    return;
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    job_ = &fn;
    chunks_ = chunks;
    pending_ = workers_ - 1;
    ++generation_;
  }
  start_cv_.notify_all();
  for (int c = 0; c < chunks; c += workers_) fn(c);
  std::unique_lock<std::mutex> lock(mu_);
  done_cv_.wait(lock, [&] { return pending_ == 0; });
}

}  // namespace membrane
