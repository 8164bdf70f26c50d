#pragma once

// Minimal fork-join helper.  Work is split into fixed-size chunks whose
// boundaries do not depend on the worker count, so any reduction that
// combines per-chunk partials in chunk order is bit-identical whether it ran
// on 1 thread or 32.  ZOH_THREADS caps the pool.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace zoh {

inline int& thread_override() {
  static int value = 0;  // 0 = use env / hardware
  return value;
}

inline void set_threads(int n) { thread_override() = n; }

inline int thread_count() {
  if (thread_override() > 0) return thread_override();
  if (const char* env = std::getenv("ZOH_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, count).  fn must be safe to call concurrently for
// distinct i.  Exceptions from workers are rethrown (first one wins).
inline void parallel_for(std::uint64_t count, const std::function<void(std::uint64_t)>& fn) {
  const int workers = std::min<std::uint64_t>(thread_count(), count == 0 ? 1 : count);
  if (workers <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::uint64_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (const std::exception& e) {
          if (!failed.exchange(true)) error = e.what();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) throw std::runtime_error(error.empty() ? "worker failed" : error);
}

}  // namespace zoh
