#include <atomic>
#include <chrono>
#include <thread>

#include "doctest.h"
#include "edabench/dispatch.hpp"

using namespace edabench;
using Clock = std::chrono::steady_clock;

TEST_CASE("backoff grows geometrically") {
  RetryPolicy p;
  CHECK(p.backoff(1).count() == 500);
  CHECK(p.backoff(2).count() == 1000);
  CHECK(p.backoff(3).count() == 2000);
}

TEST_CASE("policy rejects nonsense") {
  RetryPolicy p;
  p.max_attempts = 0;
  CHECK_THROWS_AS(p.check(), Error);
  p = RetryPolicy{};
  p.max_in_flight = 0;
  CHECK_THROWS_AS(p.check(), Error);
}

TEST_CASE("in-flight requests never exceed the bound") {
  RetryPolicy p;
  p.max_in_flight = 8;
  Dispatcher d(p);
  std::atomic<int> live{0}, seen{0};
  std::vector<Request<int>> batch;
  for (int i = 0; i < 100; ++i) {
    batch.push_back({"b", [&, i] {
                       const int now = ++live;
                       int prev = seen.load();
                       while (now > prev && !seen.compare_exchange_weak(prev, now)) {
                       }
                       std::this_thread::sleep_for(std::chrono::milliseconds(5));
                       --live;
                       return i;
                     }});
  }
  const auto out = d.dispatch(std::move(batch));
  REQUIRE(out.size() == 100);
  for (int i = 0; i < 100; ++i) CHECK(*out[i].value == i);
  CHECK(seen.load() <= 8);
  CHECK(d.peak_in_flight() <= 8);
  CHECK(d.peak_in_flight() >= 2);
}

TEST_CASE("rate cap spaces requests per backend") {
  RetryPolicy p;
  p.per_backend_rate = 2.0;
  Dispatcher d(p);
  std::vector<Request<int>> batch;
  for (int i = 0; i < 10; ++i) batch.push_back({"slow", [i] { return i; }});
  const auto t0 = Clock::now();
  const auto out = d.dispatch(std::move(batch));
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  CHECK(secs >= 4.5);
  for (const auto& o : out) CHECK(o.ok());
}

TEST_CASE("rate caps are independent across backends") {
  RetryPolicy p;
  p.per_backend_rate = 2.0;
  Dispatcher d(p);
  std::vector<Request<int>> batch;
  for (int i = 0; i < 4; ++i) batch.push_back({"b" + std::to_string(i), [i] { return i; }});
  const auto t0 = Clock::now();
  d.dispatch(std::move(batch));
  CHECK(std::chrono::duration<double>(Clock::now() - t0).count() < 1.0);
}

TEST_CASE("one persistent failure does not disturb the batch") {
  RetryPolicy p;
  p.base_backoff = std::chrono::milliseconds(1);
  Dispatcher d(p);
  std::vector<Request<int>> batch;
  for (int i = 0; i < 100; ++i) {
    batch.push_back({"b", [i]() -> int {
                       if (i == 42) throw Error(ErrorCode::TransientFailure, "503");
                       return i * 2;
                     }});
  }
  const auto out = d.dispatch(std::move(batch));
  for (int i = 0; i < 100; ++i) {
    if (i == 42) {
      CHECK_FALSE(out[i].ok());
      CHECK(out[i].error == ErrorCode::BackendUnavailable);
      CHECK(out[i].attempts == 5);
    } else {
      CHECK(*out[i].value == i * 2);
      CHECK(out[i].attempts == 1);
    }
  }
}

TEST_CASE("transient failures are retried until success") {
  RetryPolicy p;
  p.base_backoff = std::chrono::milliseconds(1);
  Dispatcher d(p);
  int calls = 0;
  int attempts = 0;
  const int v = d.call(
      "b",
      [&] {
        if (++calls < 3) throw Error(ErrorCode::TransientFailure, "429");
        return 7;
      },
      &attempts);
  CHECK(v == 7);
  CHECK(attempts == 3);
}

TEST_CASE("non-transient errors surface on the first attempt") {
  RetryPolicy p;
  p.base_backoff = std::chrono::milliseconds(1);
  Dispatcher d(p);
  int calls = 0;
  try {
    d.call("b", [&]() -> int {
      ++calls;
      throw Error(ErrorCode::EmptyAnswer, "blank");
    });
    FAIL("expected EmptyAnswer");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyAnswer);
  }
  CHECK(calls == 1);
}
