#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pemlab {

// Fixed-size worker pool handed to the numerical modules. Work is split by
// index; callers write results into per-index slots, so the outcome of a
// parallel_for never depends on the number of threads or on scheduling.
class Executor {
 public:
  // threads == 0 selects std::thread::hardware_concurrency().
  explicit Executor(unsigned threads = 1);
  ~Executor();

  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  unsigned threads() const { return static_cast<unsigned>(workers_.size()) + 1; }

  // Calls fn(i) for every i in [0, n). The calling thread participates.
  // If any call throws, the exception thrown by the smallest index is
  // rethrown after all work has finished.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) const;

  template <class T, class F>
  std::vector<T> map(std::size_t n, F&& fn) const {
    std::vector<T> out(n);
    parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
    return out;
  }

  // Shared single-threaded executor for callers that do not care.
  static const Executor& sequential();

 private:
  struct Job;
  void worker_loop();

  std::vector<std::thread> workers_;
  mutable std::mutex mutex_;
  mutable std::condition_variable wake_;
  mutable std::condition_variable done_;
  mutable Job* job_ = nullptr;
  mutable std::size_t generation_ = 0;
  bool stopping_ = false;
  mutable std::mutex submit_mutex_;
};

}  // namespace pemlab
