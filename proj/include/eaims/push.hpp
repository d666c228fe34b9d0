#pragma once

// Fan-out channel with a bounded queue per subscriber. Publishing never
// blocks: a subscriber whose queue is full is disconnected instead.

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace eaims {

inline constexpr std::size_t kDefaultPushBuffer = 1000;

template <typename Message>
class BroadcastChannel {
 public:
  class Subscription {
   public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    /// Next message, or nullopt on timeout or once closed and drained.
    template <typename Rep, typename Period>
    std::optional<Message> next(std::chrono::duration<Rep, Period> timeout) {
      std::unique_lock lock(mutex_);
      cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
      if (queue_.empty()) return std::nullopt;
      Message m = std::move(queue_.front());
      queue_.pop_front();
      return m;
    }

    bool closed() const {
      std::lock_guard lock(mutex_);
      return closed_;
    }

    /// True when it was cut off for falling behind.
    bool overflowed() const {
      std::lock_guard lock(mutex_);
      return overflowed_;
    }

    std::size_t pending() const {
      std::lock_guard lock(mutex_);
      return queue_.size();
    }

   private:
    friend class BroadcastChannel;

    // Returns false when the subscriber must be dropped.
    bool offer(const Message& m) {
      std::lock_guard lock(mutex_);
      if (closed_) return false;
      if (queue_.size() >= capacity_) {
        closed_ = true;
        overflowed_ = true;
        queue_.clear();
        cv_.notify_all();
        return false;
      }
      queue_.push_back(m);
      cv_.notify_one();
      return true;
    }

    void close() {
      std::lock_guard lock(mutex_);
      closed_ = true;
      cv_.notify_all();
    }

    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Message> queue_;
    bool closed_ = false;
    bool overflowed_ = false;
  };

  explicit BroadcastChannel(std::size_t capacity = kDefaultPushBuffer) : capacity_(capacity) {}

  /// New subscribers only see messages published after this call.
  std::shared_ptr<Subscription> subscribe() {
    auto sub = std::make_shared<Subscription>(capacity_);
    std::lock_guard lock(mutex_);
    if (closed_) {
      sub->close();
    } else {
      subscribers_.push_back(sub);
    }
    return sub;
  }

  void publish(const Message& m) {
    std::lock_guard lock(mutex_);
    std::erase_if(subscribers_, [&](const std::weak_ptr<Subscription>& weak) {
      auto sub = weak.lock();
      return !sub || !sub->offer(m);
    });
    ++published_;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    for (auto& weak : subscribers_) {
      if (auto sub = weak.lock()) sub->close();
    }
    subscribers_.clear();
  }

  std::size_t subscriber_count() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& weak : subscribers_) n += weak.expired() ? 0 : 1;
    return n;
  }

  std::size_t published() const {
    std::lock_guard lock(mutex_);
    return published_;
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::vector<std::weak_ptr<Subscription>> subscribers_;
  bool closed_ = false;
  std::size_t published_ = 0;
};

}  // namespace eaims
