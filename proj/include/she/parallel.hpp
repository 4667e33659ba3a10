#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace she {

// Thread count: explicit setting, else SHE_THREADS, else 1.
int thread_count();
void set_thread_count(int n);

// Runs body(begin, end) over a static partition of [0, n). The partition
// into chunks depends only on n and grain, never on the thread count.
void parallel_chunks(std::size_t n, std::size_t grain, const std::function<void(std::size_t, std::size_t)>& body);

template <class F>
void parallel_for(std::size_t n, F&& f, std::size_t grain = 1) {
  parallel_chunks(n, grain, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) f(i);
  });
}

// Deterministic sum: fixed chunking, partial sums combined in chunk order.
template <class F>
double parallel_sum(std::size_t n, F&& f, std::size_t grain = 4096) {
  const std::size_t chunks = (n + grain - 1) / grain;
  std::vector<double> part(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    double s = 0.0;
    const std::size_t e = std::min(n, (c + 1) * grain);
    for (std::size_t i = c * grain; i < e; ++i) s += f(i);
    part[c] = s;
  });
  double s = 0.0;
  for (double p : part) s += p;
  return s;
}

}  // namespace she
