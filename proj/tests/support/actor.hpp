// A thread that stays alive and runs submitted closures in order, so a test
// can drive several registered threads step by step.
#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <thread>
#include <type_traits>

namespace testing_support {

class Actor {
 public:
  Actor() : thread_([this] { loop(); }) {}

  Actor(const Actor&) = delete;
  Actor& operator=(const Actor&) = delete;

  ~Actor() {
    post([this] { quit_ = true; });
    thread_.join();
  }

  /// Runs `f` on the actor thread and waits for its result.
  template <class F>
  auto run(F f) -> std::invoke_result_t<F> {
    return submit(std::move(f)).get();
  }

  /// Queues `f`; the returned future completes when it has run.
  template <class F>
  auto submit(F f) -> std::future<std::invoke_result_t<F>> {
    auto task = std::make_shared<std::packaged_task<std::invoke_result_t<F>()>>(std::move(f));
    auto fut = task->get_future();
    post([task] { (*task)(); });
    return fut;
  }

  std::thread::native_handle_type native_handle() { return thread_.native_handle(); }

 private:
  void post(std::function<void()> fn) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(fn));
    }
    cv_.notify_one();
  }

  void loop() {
    while (!quit_) {
      std::function<void()> fn;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return !queue_.empty(); });
        fn = std::move(queue_.front());
        queue_.pop_front();
      }
      fn();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool quit_ = false;
  std::thread thread_;
};

}  // namespace testing_support
