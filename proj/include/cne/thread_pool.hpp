#pragma once

#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cne {

// Persistent worker pool for data-parallel loops. Work is handed out as
// contiguous index chunks whose boundaries depend only on the job count and
// pool size, and every output element is written by exactly one chunk, so
// results are independent of scheduling and of the number of workers.
class ThreadPool {
 public:
  explicit ThreadPool(int threads);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  // Calls fn(begin, end) over a partition of [0, n). The calling thread
  // participates. Rethrows the first exception raised by any chunk.
  void run_chunks(int n, const std::function<void(int, int)>& fn);

 private:
  struct Task;
  void worker_loop();

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  const std::function<void(int, int)>* fn_ = nullptr;
  int total_jobs_ = 0;
  int chunk_count_ = 0;
  int next_chunk_ = 0;
  int active_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

// Convenience wrapper: nullptr or single-thread pools run inline.
void parallel_chunks(ThreadPool* pool, int n, const std::function<void(int, int)>& fn);

}  // namespace cne
