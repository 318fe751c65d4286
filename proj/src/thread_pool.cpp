#include "cne/thread_pool.hpp"

#include <algorithm>
#include <cassert>

namespace cne {

ThreadPool::ThreadPool(int threads) {
  int extra = std::max(0, threads - 1);
  workers_.reserve(extra);
  for (int i = 0; i < extra; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  work_cv_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::worker_loop() {
  uint64_t seen = 0;
  for (;;) {
    std::unique_lock<std::mutex> lock(mu_);
    work_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
    if (stop_) return;
    seen = generation_;
    while (next_chunk_ < chunk_count_) {
      int chunk = next_chunk_++;
      int begin = static_cast<int>(static_cast<long long>(chunk) * total_jobs_ / chunk_count_);
      int end = static_cast<int>(static_cast<long long>(chunk + 1) * total_jobs_ / chunk_count_);
      ++active_;
      lock.unlock();
      try {
        if (begin < end) (*fn_)(begin, end);
      } catch (...) {
        lock.lock();
        if (!error_) error_ = std::current_exception();
        --active_;
        continue;
      }
      lock.lock();
      --active_;
    }
    if (active_ == 0) done_cv_.notify_all();
  }
}

void ThreadPool::run_chunks(int n, const std::function<void(int, int)>& fn) {
  if (n <= 0) return;
  if (workers_.empty()) {
    fn(0, n);
    return;
  }
  std::unique_lock<std::mutex> lock(mu_);
  fn_ = &fn;
  total_jobs_ = n;
  chunk_count_ = std::min(n, size());
  next_chunk_ = 0;
  error_ = nullptr;
  ++generation_;
  work_cv_.notify_all();
  // The caller claims chunks too.
  while (next_chunk_ < chunk_count_) {
    int chunk = next_chunk_++;
    int begin = static_cast<int>(static_cast<long long>(chunk) * total_jobs_ / chunk_count_);
    int end = static_cast<int>(static_cast<long long>(chunk + 1) * total_jobs_ / chunk_count_);
    ++active_;
    lock.unlock();
    try {
      if (begin < end) fn(begin, end);
    } catch (...) {
      lock.lock();
      if (!error_) error_ = std::current_exception();
      --active_;
      continue;
    }
    lock.lock();
    --active_;
  }
  done_cv_.wait(lock, [&] { return active_ == 0; });
  fn_ = nullptr;
  if (error_) std::rethrow_exception(error_);
}

void parallel_chunks(ThreadPool* pool, int n, const std::function<void(int, int)>& fn) {
  if (n <= 0) return;
  if (pool == nullptr || pool->size() <= 1) {
    fn(0, n);
    return;
  }
  pool->run_chunks(n, fn);
}

}  // namespace cne
