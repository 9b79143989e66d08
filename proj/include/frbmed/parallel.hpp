#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace frbmed {

inline unsigned default_thread_count() {
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on `threads` workers. Each index is
/// handled by exactly one worker, so writes to slot i need no locking. The
/// first exception (lowest index) is rethrown after all workers join.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(
                                                         std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::size_t> error_index(threads, count);
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) {
        try {
          body(i);
        } catch (...) {
          errors[t] = std::current_exception();
          error_index[t] = i;
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  std::size_t best = count;
  std::exception_ptr first;
  for (unsigned t = 0; t < threads; ++t) {
    if (errors[t] && error_index[t] < best) {
      best = error_index[t];
      first = errors[t];
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace frbmed
