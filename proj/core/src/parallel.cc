#include "pemlab/parallel.h"

#include <atomic>
#include <exception>
#include <limits>

namespace pemlab {
namespace {
// Nested parallel_for calls from inside a task run inline.
thread_local bool inside_task = false;

struct TaskScope {
  bool previous;
  TaskScope() : previous(inside_task) { inside_task = true; }
  ~TaskScope() { inside_task = previous; }
};
}  // namespace

struct Executor::Job {
  std::size_t n = 0;
  const std::function<void(std::size_t)>* fn = nullptr;
  std::atomic<std::size_t> next{0};
  std::size_t active = 0;  // guarded by mutex_
  std::mutex error_mutex;
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error;

  void run() {
    TaskScope scope;
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        (*fn)(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  }
};

Executor::Executor(unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  workers_.reserve(threads - 1);
  for (unsigned t = 1; t < threads; ++t) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

Executor::~Executor() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  for (auto& w : workers_) w.join();
}

const Executor& Executor::sequential() {
  static const Executor instance(1);
  return instance;
}

void Executor::worker_loop() {
  std::size_t seen = 0;
  for (;;) {
    Job* job = nullptr;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stopping_ || (job_ != nullptr && generation_ != seen); });
      if (stopping_) return;
      seen = generation_;
      job = job_;
      ++job->active;
    }
    job->run();
    {
      std::lock_guard lock(mutex_);
      --job->active;
    }
    done_.notify_all();
  }
}

void Executor::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) const {
  if (n == 0) return;
  Job job;
  job.n = n;
  job.fn = &fn;
  if (workers_.empty() || n == 1 || inside_task) {
    job.run();
  } else {
    std::lock_guard submit(submit_mutex_);
    {
      std::lock_guard lock(mutex_);
      job_ = &job;
      ++generation_;
    }
    wake_.notify_all();
    job.run();
    std::unique_lock lock(mutex_);
    job_ = nullptr;
    done_.wait(lock, [&] { return job.active == 0; });
  }
  if (job.error) std::rethrow_exception(job.error);
}

}  // namespace pemlab
