#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace semtok::detail {

// Runs fn(begin, end) over contiguous slices of [0, n). Each slice must only
// write to its own outputs; the caller reduces afterwards in a fixed order.
template <typename Fn>
void parallel_ranges(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n / 256 + 1));
  if (threads == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

}  // namespace semtok::detail
