#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace starbody {

/// Runs `n` independent tasks. Library code never owns threads; callers pass
/// an executor (or nullptr for serial execution).
class Executor {
 public:
  virtual ~Executor() = default;
  virtual void run(std::size_t n, const std::function<void(std::size_t)>& task) const = 0;
  virtual std::size_t workers() const = 0;
};

class SerialExecutor final : public Executor {
 public:
  void run(std::size_t n, const std::function<void(std::size_t)>& task) const override {
    for (std::size_t i = 0; i < n; ++i) task(i);
  }
  std::size_t workers() const override { return 1; }
};

/// Fixed-size worker pool. Tasks are claimed from an atomic counter; the first
/// exception thrown by any task is rethrown from run().
class ThreadPool final : public Executor {
 public:
  explicit ThreadPool(std::size_t n_workers) : n_workers_(std::max<std::size_t>(1, n_workers)) {
    for (std::size_t i = 1; i < n_workers_; ++i) threads_.emplace_back([this] { worker_loop(); });
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() override {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void run(std::size_t n, const std::function<void(std::size_t)>& task) const override {
    if (n == 0) return;
    std::lock_guard run_lock(run_mu_);
    {
      std::lock_guard lock(mu_);
      n_tasks_.store(0);
      next_.store(0);
      task_.store(&task);
      n_tasks_.store(n);
      done_ = 0;
      error_ = nullptr;
      ++generation_;
    }
    cv_.notify_all();
    drain();
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [&] { return done_ == n; });
    task_.store(nullptr);
    n_tasks_.store(0);
    if (error_) std::rethrow_exception(error_);
  }

  std::size_t workers() const override { return n_workers_; }

 private:
  void drain() const {
    while (true) {
      const std::size_t i = next_.fetch_add(1);
      const std::size_t n = n_tasks_.load();
      const auto* task = task_.load();
      if (i >= n || task == nullptr) return;
      try {
        (*task)(i);
      } catch (...) {
        std::lock_guard lock(mu_);
        if (!error_) error_ = std::current_exception();
      }
      std::lock_guard lock(mu_);
      if (++done_ == n) done_cv_.notify_all();
    }
  }

  void worker_loop() const {
    std::size_t seen = 0;
    while (true) {
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || (generation_ != seen && task_ != nullptr); });
        if (stop_) return;
        seen = generation_;
      }
      drain();
    }
  }

  std::size_t n_workers_;
  std::vector<std::thread> threads_;
  mutable std::mutex run_mu_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  mutable std::condition_variable done_cv_;
  mutable std::atomic<const std::function<void(std::size_t)>*> task_{nullptr};
  mutable std::atomic<std::size_t> n_tasks_{0};
  mutable std::atomic<std::size_t> next_{0};
  mutable std::size_t done_ = 0;
  mutable std::size_t generation_ = 0;
  mutable std::exception_ptr error_;
  bool stop_ = false;
};

/// Evaluates fn(i) for i in [0, n) and returns the results in index order, so
/// any reduction over them is independent of the worker count.
template <class Fn>
auto map_indexed(const Executor* exec, std::size_t n, Fn&& fn) {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<R> out(n);
  const std::function<void(std::size_t)> task = [&](std::size_t i) { out[i] = fn(i); };
  if (exec == nullptr) {
    for (std::size_t i = 0; i < n; ++i) task(i);
  } else {
    exec->run(n, task);
  }
  return out;
}

}  // namespace starbody
