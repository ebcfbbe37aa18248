#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace plateau {

/// Runs body(begin, end) over [0, count) split into `workers` contiguous
/// blocks. Block boundaries depend only on (count, workers), so any body that
/// writes disjoint per-index outputs is deterministic.
template <typename Body>
void parallel_blocks(std::size_t count, int workers, Body&& body) {
  const std::size_t w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1 || count < 2 * w) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(w);
  threads.reserve(w);
  for (std::size_t b = 0; b < w; ++b) {
    const std::size_t lo = count * b / w;
    const std::size_t hi = count * (b + 1) / w;
    threads.emplace_back([&, b, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace plateau
