#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fraudfuse {

// Minimal shared worker pool. Work is split into indexed tasks pulled from an
// atomic counter; every result slot is owned by exactly one task, so outputs
// are identical for any worker count. Reductions that sum floating point
// values must go through parallel_for_blocked so the combine order is fixed.
class ThreadPool {
 public:
  static ThreadPool& global();

  explicit ThreadPool(unsigned n_threads = 1);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  void resize(unsigned n_threads);
  unsigned size() const { return n_threads_; }

  // Runs fn(task_index) for every index in [0, n_tasks); blocks until done.
  // The calling thread participates. Exceptions are rethrown on the caller.
  void run(size_t n_tasks, const std::function<void(size_t)>& fn);

 private:
  void worker_loop();
  void stop_workers();
  void start_workers(unsigned n);
  void work_until_done();

  unsigned n_threads_ = 1;
  std::vector<std::thread> workers_;

  std::mutex mu_;
  std::condition_variable cv_job_;
  std::condition_variable cv_done_;
  bool shutdown_ = false;
  size_t job_tasks_ = 0;
  size_t next_task_ = 0;
  size_t finished_ = 0;
  const std::function<void(size_t)>* job_fn_ = nullptr;
  std::exception_ptr first_error_;
};

inline void parallel_for(size_t n_tasks, const std::function<void(size_t)>& fn) {
  ThreadPool::global().run(n_tasks, fn);
}

// Fixed-size blocks regardless of worker count: fn(block, begin, end).
// Callers combine per-block partials in block order to stay deterministic.
inline void parallel_for_blocked(size_t n_items, size_t block_size,
                                 const std::function<void(size_t, size_t, size_t)>& fn) {
  if (block_size == 0) block_size = 1;
  const size_t n_blocks = (n_items + block_size - 1) / block_size;
  parallel_for(n_blocks, [&](size_t b) {
    const size_t begin = b * block_size;
    const size_t end = begin + block_size < n_items ? begin + block_size : n_items;
    fn(b, begin, end);
  });
}

}  // namespace fraudfuse
