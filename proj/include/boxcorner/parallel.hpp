#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace bc {

// Process-wide worker count. 1 means run inline.
int workers();
void set_workers(int w);

// Runs body(i) for i in [0, n). Results must be written to per-index slots so
// the caller can reduce in index order; that keeps sums bit-identical for any
// worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

template <class F>
double ordered_sum(std::size_t n, F&& term) {
  std::vector<double> part(n, 0.0);
  parallel_for(n, [&](std::size_t i) { part[i] = term(i); });
  double s = 0.0;
  for (double v : part) s += v;
  return s;
}

}  // namespace bc
