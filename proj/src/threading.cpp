#include "fraudfuse/threading.hpp"

namespace fraudfuse {

ThreadPool& ThreadPool::global() {
  static ThreadPool pool(std::thread::hardware_concurrency() > 0
                             ? std::thread::hardware_concurrency()
                             : 1);
  return pool;
}

ThreadPool::ThreadPool(unsigned n_threads) {
  n_threads_ = n_threads > 0 ? n_threads : 1;
  start_workers(n_threads_);
}

ThreadPool::~ThreadPool() { stop_workers(); }

void ThreadPool::start_workers(unsigned n) {
  // n-1 background workers; the thread calling run() is the n-th.
  for (unsigned i = 1; i < n; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

void ThreadPool::stop_workers() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    shutdown_ = true;
  }
  cv_job_.notify_all();
  for (auto& w : workers_) w.join();
  workers_.clear();
  shutdown_ = false;
}

void ThreadPool::resize(unsigned n_threads) {
  if (n_threads == 0) n_threads = 1;
  if (n_threads == n_threads_) return;
  stop_workers();
  n_threads_ = n_threads;
  start_workers(n_threads_);
}

void ThreadPool::run(size_t n_tasks, const std::function<void(size_t)>& fn) {
  if (n_tasks == 0) return;
  if (n_threads_ == 1 || n_tasks == 1) {
    for (size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    job_tasks_ = n_tasks;
    next_task_ = 0;
    finished_ = 0;
    job_fn_ = &fn;
    first_error_ = nullptr;
  }
  cv_job_.notify_all();
  work_until_done();

  std::unique_lock<std::mutex> lock(mu_);
  cv_done_.wait(lock, [this] { return finished_ == job_tasks_; });
  job_fn_ = nullptr;
  if (first_error_) std::rethrow_exception(first_error_);
}

void ThreadPool::work_until_done() {
  for (;;) {
    size_t task;
    const std::function<void(size_t)>* fn;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (job_fn_ == nullptr || next_task_ >= job_tasks_) return;
      task = next_task_++;
      fn = job_fn_;
    }
    try {
      (*fn)(task);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      if (!first_error_) first_error_ = std::current_exception();
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (++finished_ == job_tasks_) cv_done_.notify_all();
    }
  }
}

void ThreadPool::worker_loop() {
  for (;;) {
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_job_.wait(lock, [this] {
        return shutdown_ || (job_fn_ != nullptr && next_task_ < job_tasks_);
      });
      if (shutdown_) return;
    }
    work_until_done();
  }
}

}  // namespace fraudfuse
