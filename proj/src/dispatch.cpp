#include "edabench/dispatch.hpp"

#include <cmath>
#include <fmt/format.h>

namespace edabench {

void RetryPolicy::check() const {
  if (max_attempts < 1 || max_in_flight < 1 || backoff_factor < 1.0 || base_backoff.count() < 0 ||
      per_backend_rate < 0.0) {
    throw Error(ErrorCode::ConfigError,
                fmt::format("retry policy out of range (attempts={}, in_flight={}, factor={}, rate={})",
                            max_attempts, max_in_flight, backoff_factor, per_backend_rate));
  }
}

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  const double ms = static_cast<double>(base_backoff.count()) * std::pow(backoff_factor, attempt - 1);
  return std::chrono::milliseconds(static_cast<long long>(std::llround(ms)));
}

void RateLimiter::acquire() {
  if (rate_ <= 0.0) return;
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = Clock::now();
    slot = next_ && *next_ > now ? *next_ : now;
    next_ = slot + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / rate_));
  }
  std::this_thread::sleep_until(slot);
}

Dispatcher::Dispatcher(RetryPolicy policy) : policy_(policy) { policy_.check(); }

void Dispatcher::enter() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < policy_.max_in_flight; });
  ++in_flight_;
  int peak = peak_.load();
  while (in_flight_ > peak && !peak_.compare_exchange_weak(peak, in_flight_)) {
  }
}

void Dispatcher::leave() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

RateLimiter& Dispatcher::limiter(const std::string& backend) {
  std::lock_guard lock(limiters_mu_);
  auto& slot = limiters_[backend];
  if (!slot) slot = std::make_unique<RateLimiter>(policy_.per_backend_rate);
  return *slot;
}

}  // namespace edabench
