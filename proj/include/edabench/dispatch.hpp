#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "edabench/error.hpp"

namespace edabench {

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_backoff{500};
  double backoff_factor = 2.0;
  double per_backend_rate = 0.0;  // requests/second; 0 disables the cap
  int max_in_flight = 8;

  void check() const;
  std::chrono::milliseconds backoff(int attempt) const;  // delay before retry number `attempt` (1-based)
};

/// Token bucket with unit capacity: successive grants are spaced 1/rate apart.
class RateLimiter {
 public:
  explicit RateLimiter(double rate) : rate_(rate) {}
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  double rate_;
  std::mutex mu_;
  std::optional<Clock::time_point> next_;
};

template <typename T>
struct Outcome {
  std::optional<T> value;
  std::optional<ErrorCode> error;
  std::string message;
  int attempts = 0;

  bool ok() const { return value.has_value(); }
};

template <typename T>
struct Request {
  std::string backend;
  std::function<T()> fn;
};

/// Shared gate for every outbound request: bounds requests in flight, applies
/// the per-backend rate cap and retries TransientFailure with exponential
/// backoff. Any other Error is returned to the caller on the first attempt.
class Dispatcher {
 public:
  explicit Dispatcher(RetryPolicy policy);

  const RetryPolicy& policy() const { return policy_; }

  /// Runs fn under the gate. Throws BackendUnavailable once attempts run out.
  template <typename F>
  auto call(const std::string& backend, F&& fn, int* attempts_out = nullptr) -> decltype(fn());

  /// Runs every request, at most max_in_flight at a time. Results keep the
  /// input order; a failed request never affects the others.
  template <typename T>
  std::vector<Outcome<T>> dispatch(std::vector<Request<T>> batch);

  int peak_in_flight() const { return peak_.load(); }
  long total_attempts() const { return total_attempts_.load(); }

 private:
  void enter();
  void leave();
  RateLimiter& limiter(const std::string& backend);

  RetryPolicy policy_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  std::atomic<int> peak_{0};
  std::atomic<long> total_attempts_{0};
  std::mutex limiters_mu_;
  std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
};

template <typename F>
auto Dispatcher::call(const std::string& backend, F&& fn, int* attempts_out) -> decltype(fn()) {
  std::string last;
  for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
    if (attempts_out != nullptr) *attempts_out = attempt;
    if (attempt > 1) std::this_thread::sleep_for(policy_.backoff(attempt - 1));
    limiter(backend).acquire();
    enter();
    ++total_attempts_;
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        leave();
        return;
      } else {
        auto result = fn();
        leave();
        return result;
      }
    } catch (const Error& e) {
      leave();
      if (e.code() != ErrorCode::TransientFailure) throw;
      last = e.what();
    } catch (...) {
      leave();
      throw;
    }
  }
  throw Error(ErrorCode::BackendUnavailable,
              backend + " failed after " + std::to_string(policy_.max_attempts) + " attempts: " + last);
}

template <typename T>
std::vector<Outcome<T>> Dispatcher::dispatch(std::vector<Request<T>> batch) {
  std::vector<Outcome<T>> out(batch.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < batch.size(); i = next++) {
      auto& o = out[i];
      try {
        o.value = call(batch[i].backend, batch[i].fn, &o.attempts);
      } catch (const Error& e) {
        o.error = e.code();
        o.message = e.what();
      } catch (const std::exception& e) {
        o.error = ErrorCode::BackendUnavailable;
        o.message = e.what();
      }
    }
  };
  const auto n = std::min<std::size_t>(batch.size(), static_cast<std::size_t>(policy_.max_in_flight));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return out;
}

}  // namespace edabench
